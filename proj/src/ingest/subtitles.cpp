#include "inval/subtitles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>

#include "inval/errors.hpp"

namespace inval {

namespace {

struct Line {
    std::size_t number;
    std::string_view text;
};

std::vector<Line> split_lines(std::string_view s) {
    std::vector<Line> lines;
    std::size_t n = 1;
    while (!s.empty()) {
        auto pos = s.find('\n');
        auto line = s.substr(0, pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back({n++, line});
        if (pos == std::string_view::npos) break;
        s.remove_prefix(pos + 1);
    }
    return lines;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Parses "[H+:]MM:SS<sep>mmm" into whole milliseconds.
std::optional<std::int64_t> parse_timestamp_ms(std::string_view s, char ms_sep, bool hours_optional) {
    auto dot = s.rfind(ms_sep);
    if (dot == std::string_view::npos) return std::nullopt;
    auto frac = s.substr(dot + 1);
    auto hms = s.substr(0, dot);
    if (frac.size() != 3 || !all_digits(frac)) return std::nullopt;

    std::vector<std::string_view> parts;
    while (true) {
        auto c = hms.find(':');
        parts.push_back(hms.substr(0, c));
        if (c == std::string_view::npos) break;
        hms.remove_prefix(c + 1);
    }
    if (parts.size() == 2 && !hours_optional) return std::nullopt;
    if (parts.size() != 2 && parts.size() != 3) return std::nullopt;

    std::int64_t h = 0;
    std::size_t i = 0;
    if (parts.size() == 3) {
        if (!all_digits(parts[0]) || parts[0].size() > 4) return std::nullopt;
        h = std::stoll(std::string(parts[0]));
        i = 1;
    }
    auto mm = parts[i], ss = parts[i + 1];
    if (mm.size() != 2 || ss.size() != 2 || !all_digits(mm) || !all_digits(ss)) return std::nullopt;
    std::int64_t m = std::stoll(std::string(mm)), sec = std::stoll(std::string(ss));
    if (m > 59 || sec > 59) return std::nullopt;
    return ((h * 60 + m) * 60 + sec) * 1000 + std::stoll(std::string(frac));
}

struct Timing {
    double start_s;
    double end_s;
};

Timing parse_timing_line(const Line& line, SubtitleFormat fmt) {
    auto arrow = line.text.find("-->");
    if (arrow == std::string_view::npos) throw ParseError(line.number, "expected timing line");
    auto lhs = trim(line.text.substr(0, arrow));
    auto rhs = trim(line.text.substr(arrow + 3));
    // Cue settings (VTT) or coordinates (some SRT) follow the end time.
    auto sp = rhs.find_first_of(" \t");
    if (sp != std::string_view::npos) rhs = rhs.substr(0, sp);

    const bool vtt = fmt == SubtitleFormat::vtt;
    auto a = parse_timestamp_ms(lhs, vtt ? '.' : ',', vtt);
    auto b = parse_timestamp_ms(rhs, vtt ? '.' : ',', vtt);
    if (!a || !b) throw ParseError(line.number, "malformed timestamp '" + std::string(line.text) + "'");
    if (*b <= *a) throw ParseError(line.number, "cue ends before it starts");
    return {static_cast<double>(*a) / 1000.0, static_cast<double>(*b) / 1000.0};
}

void decode_entities(std::string& s) {
    static const std::pair<std::string_view, std::string_view> table[] = {
        {"&lt;", "<"}, {"&gt;", ">"}, {"&nbsp;", " "}, {"&lrm;", ""}, {"&rlm;", ""}, {"&amp;", "&"}};
    for (const auto& [from, to] : table) {
        std::size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
    }
}

// Removes <...> markup, SSA-style {\...} overrides, and collapses whitespace.
std::string clean_text(const std::vector<std::string_view>& lines, bool vtt) {
    std::string joined;
    for (auto l : lines) {
        if (!joined.empty()) joined += ' ';
        joined += l;
    }
    std::string stripped;
    stripped.reserve(joined.size());
    for (std::size_t i = 0; i < joined.size(); ++i) {
        char c = joined[i];
        if (c == '<') {
            auto close = joined.find('>', i);
            if (close != std::string::npos) {
                i = close;
                continue;
            }
        } else if (c == '{' && i + 1 < joined.size() && joined[i + 1] == '\\') {
            auto close = joined.find('}', i);
            if (close != std::string::npos) {
                i = close;
                continue;
            }
        }
        stripped += c;
    }
    if (vtt) decode_entities(stripped);

    std::string out;
    bool space = false;
    for (char c : stripped) {
        if (c == ' ' || c == '\t') {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::vector<std::vector<Line>> split_blocks(const std::vector<Line>& lines, std::size_t from) {
    std::vector<std::vector<Line>> blocks;
    std::vector<Line> cur;
    for (std::size_t i = from; i < lines.size(); ++i) {
        if (is_blank(lines[i].text)) {
            if (!cur.empty()) blocks.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(lines[i]);
        }
    }
    if (!cur.empty()) blocks.push_back(std::move(cur));
    return blocks;
}

void parse_srt(const std::vector<Line>& lines, RawSubtitleDocument& doc) {
    int ordinal = 0;
    for (const auto& block : split_blocks(lines, 0)) {
        std::size_t t = 0;
        int index = ++ordinal;
        if (block[0].text.find("-->") == std::string_view::npos) {
            auto id = trim(block[0].text);
            if (!all_digits(id) || block.size() < 2) throw ParseError(block[0].number, "expected cue index");
            index = std::stoi(std::string(id));
            t = 1;
        }
        auto timing = parse_timing_line(block[t], SubtitleFormat::srt);
        std::vector<std::string_view> text;
        for (std::size_t i = t + 1; i < block.size(); ++i) text.push_back(block[i].text);
        auto cleaned = clean_text(text, false);
        if (cleaned.empty()) continue;
        doc.cues.push_back({index, timing.start_s, timing.end_s, std::move(cleaned)});
    }
}

void parse_vtt(const std::vector<Line>& lines, RawSubtitleDocument& doc) {
    // Header block: "WEBVTT" plus optional metadata lines up to the first blank line.
    std::size_t i = 0;
    while (i < lines.size() && !is_blank(lines[i].text)) ++i;
    int ordinal = 0;
    for (const auto& block : split_blocks(lines, i)) {
        auto first = trim(block[0].text);
        if (first.starts_with("NOTE") || first == "STYLE" || first == "REGION") continue;
        std::size_t t = 0;
        if (block[0].text.find("-->") == std::string_view::npos) {
            if (block.size() < 2) throw ParseError(block[0].number, "expected timing line");
            t = 1;  // cue identifier
        }
        auto timing = parse_timing_line(block[t], SubtitleFormat::vtt);
        std::vector<std::string_view> text;
        for (std::size_t j = t + 1; j < block.size(); ++j) text.push_back(block[j].text);
        auto cleaned = clean_text(text, true);
        if (cleaned.empty()) continue;
        doc.cues.push_back({++ordinal, timing.start_s, timing.end_s, std::move(cleaned)});
    }
}

bool word_prefix(const std::string& shorter, const std::string& longer) {
    if (shorter.size() > longer.size()) return false;
    if (shorter.size() == longer.size()) return shorter == longer;
    return longer.compare(0, shorter.size(), shorter) == 0 && longer[shorter.size()] == ' ';
}

std::string two_digits(long long v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%02lld", v);
    return buf;
}

std::string escape_vtt(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string_view to_string(SubtitleFormat f) { return f == SubtitleFormat::srt ? "srt" : "vtt"; }

std::optional<SubtitleFormat> parse_subtitle_format(std::string_view s) {
    if (s == "srt") return SubtitleFormat::srt;
    if (s == "vtt") return SubtitleFormat::vtt;
    return std::nullopt;
}

bool is_valid_utf8(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto c = static_cast<unsigned char>(s[i]);
        std::size_t n;
        std::uint32_t cp;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            n = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            n = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            n = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        for (std::size_t k = 1; k <= n; ++k) {
            if (i + k >= s.size()) return false;
            auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        // Overlong forms, surrogates, and out-of-range code points.
        if ((n == 1 && cp < 0x80) || (n == 2 && cp < 0x800) || (n == 3 && cp < 0x10000)) return false;
        if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += n + 1;
    }
    return true;
}

RawSubtitleDocument parse_subtitles(std::string_view bytes, std::optional<SubtitleFormat> format_hint) {
    if (bytes.starts_with("\xEF\xBB\xBF")) bytes.remove_prefix(3);
    if (!is_valid_utf8(bytes)) throw ParseError(0, "input is not valid UTF-8");

    auto lines = split_lines(bytes);
    RawSubtitleDocument doc;
    bool has_header = !lines.empty() && lines[0].text.starts_with("WEBVTT");
    doc.format = format_hint.value_or(has_header ? SubtitleFormat::vtt : SubtitleFormat::srt);

    if (doc.format == SubtitleFormat::vtt) {
        if (!has_header) throw ParseError(1, "missing WEBVTT header");
        parse_vtt(lines, doc);
    } else {
        parse_srt(lines, doc);
    }
    if (doc.cues.empty()) throw ParseError(0, "no cues");
    return doc;
}

std::vector<SubtitleCue> merge_dedupe(const RawSubtitleDocument& doc) {
    std::vector<SubtitleCue> sorted = doc.cues;
    std::stable_sort(sorted.begin(), sorted.end(), [](const SubtitleCue& a, const SubtitleCue& b) {
        return a.start_s < b.start_s || (a.start_s == b.start_s && a.end_s < b.end_s);
    });

    std::vector<SubtitleCue> out;
    for (auto& next : sorted) {
        if (out.empty()) {
            out.push_back(std::move(next));
            continue;
        }
        auto& cur = out.back();
        bool absorb = word_prefix(cur.text, next.text) || word_prefix(next.text, cur.text);
        if (absorb) {
            cur.end_s = std::max(cur.end_s, next.end_s);
            if (next.text.size() > cur.text.size()) cur.text = std::move(next.text);
            continue;
        }
        if (next.start_s < cur.end_s) {
            if (next.start_s <= cur.start_s) {
                // Same start: clipping would leave nothing of `cur`, so keep both texts in one cue.
                cur.end_s = std::max(cur.end_s, next.end_s);
                cur.text += ' ' + next.text;
                continue;
            }
            cur.end_s = next.start_s;
        }
        out.push_back(std::move(next));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<int>(i) + 1;
    return out;
}

std::vector<VideoSegment> align_segments(const std::vector<SubtitleCue>& cues, const std::string& video_id) {
    if (cues.empty()) throw PreconditionError("no segments");
    std::vector<VideoSegment> segs;
    segs.reserve(cues.size());
    for (std::size_t i = 0; i < cues.size(); ++i) {
        VideoSegment s;
        s.seg_id = static_cast<int>(i);
        s.video_id = video_id;
        s.start_s = cues[i].start_s;
        s.duration_s = cues[i].end_s - cues[i].start_s;
        s.subtitle = cues[i].text;
        segs.push_back(std::move(s));
    }
    return segs;
}

std::string format_timestamp(double seconds, bool vtt) {
    auto ms = static_cast<long long>(std::llround(seconds * 1000.0));
    long long h = ms / 3600000, m = (ms / 60000) % 60, s = (ms / 1000) % 60, f = ms % 1000;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s:%02lld:%02lld%c%03lld", two_digits(h).c_str(), m, s, vtt ? '.' : ',', f);
    return buf;
}

std::string serialize_srt(const std::vector<SubtitleCue>& cues) {
    std::ostringstream os;
    for (std::size_t i = 0; i < cues.size(); ++i) {
        const auto& c = cues[i];
        if (i) os << '\n';
        os << c.index << '\n'
           << format_timestamp(c.start_s) << " --> " << format_timestamp(c.end_s) << '\n'
           << c.text << '\n';
    }
    return os.str();
}

std::string serialize_vtt(const std::vector<SubtitleCue>& cues) {
    std::ostringstream os;
    os << "WEBVTT\n";
    for (const auto& c : cues) {
        os << '\n'
           << format_timestamp(c.start_s, true) << " --> " << format_timestamp(c.end_s, true) << '\n'
           << escape_vtt(c.text) << '\n';
    }
    return os.str();
}

std::string subtitles_blob(const std::vector<VideoSegment>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += ' ';
        out += '[' + std::to_string(segments[i].seg_id) + "] " + segments[i].subtitle;
    }
    return out;
}

}  // namespace inval
