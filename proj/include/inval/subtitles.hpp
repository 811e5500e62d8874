#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "inval/types.hpp"

namespace inval {

enum class SubtitleFormat { srt, vtt };

std::string_view to_string(SubtitleFormat f);
std::optional<SubtitleFormat> parse_subtitle_format(std::string_view s);

struct RawSubtitleDocument {
    SubtitleFormat format = SubtitleFormat::srt;
    std::vector<SubtitleCue> cues;
};

/// Parses SRT or WebVTT text. Without a hint, a leading "WEBVTT" header selects VTT.
/// Cue text has styling tags removed and its lines joined by single spaces.
/// Throws ParseError on invalid UTF-8, malformed timing lines, end <= start, or no cues.
RawSubtitleDocument parse_subtitles(std::string_view bytes,
                                    std::optional<SubtitleFormat> format_hint = std::nullopt);

/// Sorts cues and removes auto-caption artifacts:
///  - consecutive cues with identical text, or where one text is a word-prefix of the
///    other (rolling captions), collapse into one cue over their union with the longer text;
///  - remaining overlaps are clipped so the earlier cue ends where the later one starts.
/// Output is sorted, non-overlapping and reindexed from 1.
std::vector<SubtitleCue> merge_dedupe(const RawSubtitleDocument& doc);

/// One segment per cue; throws PreconditionError("no segments") on empty input.
std::vector<VideoSegment> align_segments(const std::vector<SubtitleCue>& cues, const std::string& video_id);

/// Canonical writers (LF line endings). `serialize_srt` uses "," before milliseconds.
std::string serialize_srt(const std::vector<SubtitleCue>& cues);
std::string serialize_vtt(const std::vector<SubtitleCue>& cues);

/// "HH:MM:SS,mmm" (or "." when `vtt`) from seconds rounded to the millisecond.
std::string format_timestamp(double seconds, bool vtt = false);

/// Subtitle texts joined as "[0] text [1] text ..." for prompts.
std::string subtitles_blob(const std::vector<VideoSegment>& segments);

bool is_valid_utf8(std::string_view s);

}  // namespace inval
