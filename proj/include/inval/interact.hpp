#pragma once

#include <optional>
#include <string>
#include <vector>

#include "inval/prompts.hpp"
#include "inval/providers/chat.hpp"
#include "inval/types.hpp"

namespace inval {

enum class AnswerSource { agent, human };

/// State of one clarification dialogue. `round` always equals dialogue.turns.size().
struct ChatSession {
    Dialogue dialogue;
    int round = 0;
    /// Full subtitles as "[i] text ..." (answerer context).
    std::string subtitles_blob;
    /// Text bound to the questioner's DESCRIPTION_SPANS slot; defaults to subtitles_blob.
    std::optional<std::string> description_spans;
    AnswerSource answer_source = AnswerSource::agent;
    Language lang = Language::en;

    void record(std::string question, Answer answer);
};

struct InteractOptions {
    int rounds = 3;
    ModuleToggles toggles;
    Language lang = Language::en;
    int max_in_flight = 4;
};

/// Chat-provider-backed chatting and rewriting stages.
class Interactor {
public:
    Interactor(ChatProvider& chat, InteractOptions opts) : chat_(chat), opts_(opts) {}

    /// Next yes/no follow-up given Q, the subtitles and the turns so far.
    /// Throws PreconditionError when the session already holds `rounds` turns.
    std::string ask_further_question(const ChatSession& session);

    /// Agent answer to `question`, normalized from the first token of the reply.
    /// An unparseable reply is re-asked once before AnswerError.
    Answer answer_question(const std::string& question, const ChatSession& session);

    /// Alternates questions and agent answers for `rounds` turns; zero turns with chatting off.
    /// Failures surface as RoundError carrying the 1-based round.
    Dialogue run_chat(const std::string& question, const std::vector<VideoSegment>& segments,
                      const std::optional<std::string>& description_spans = std::nullopt);

    /// Q'; the initial question unchanged with rewriting off.
    std::string rewrite_question(const Dialogue& dialogue);

    /// S'_i; the subtitle unchanged with rewriting off.
    std::string rewrite_subtitle(const VideoSegment& segment, const std::string& all_subtitles);

    /// Fills `description` on every segment, up to max_in_flight requests at a time.
    void rewrite_subtitles(std::vector<VideoSegment>& segments);

    const InteractOptions& options() const { return opts_; }

private:
    ChatProvider& chat_;
    InteractOptions opts_;
};

/// "yes"/"no" (any case, leading punctuation skipped) or 是/否 as the first token.
std::optional<Answer> parse_yes_no(std::string_view reply);

}  // namespace inval
