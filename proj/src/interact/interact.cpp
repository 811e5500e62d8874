#include "inval/interact.hpp"

#include <cctype>

#include "inval/errors.hpp"
#include "inval/parallel.hpp"
#include "inval/subtitles.hpp"
#include "inval/util.hpp"

namespace inval {

void ChatSession::record(std::string question, Answer answer) {
    dialogue.turns.push_back({std::move(question), answer});
    round = static_cast<int>(dialogue.turns.size());
}

std::optional<Answer> parse_yes_no(std::string_view reply) {
    auto s = trim_view(reply);
    // Skip leading quotes and punctuation ("**Yes**", "'no'").
    while (!s.empty() && static_cast<unsigned char>(s.front()) < 0x80 &&
           !std::isalnum(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    if (s.starts_with("是")) return Answer::yes;
    if (s.starts_with("否")) return Answer::no;
    std::string word;
    for (char c : s) {
        if (!std::isalpha(static_cast<unsigned char>(c))) break;
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (word == "yes") return Answer::yes;
    if (word == "no") return Answer::no;
    return std::nullopt;
}

std::string Interactor::ask_further_question(const ChatSession& session) {
    if (session.round >= opts_.rounds) {
        throw PreconditionError("session already has " + std::to_string(session.round) + " of " +
                                std::to_string(opts_.rounds) + " rounds");
    }
    const auto& tpl = builtin_template(template_for(PromptKind::further_question, session.lang));
    auto req = render_prompt(tpl, {{"init_question", session.dialogue.initial_question},
                                   {"hist_dialogue", format_dialogue(session.dialogue)},
                                   {"description_spans", session.description_spans.value_or(session.subtitles_blob)}});
    auto q = std::string(trim_view(chat_.chat(req)));
    if (q.empty()) throw ProviderError(ProviderError::Kind::empty, "empty follow-up question");
    return q;
}

Answer Interactor::answer_question(const std::string& question, const ChatSession& session) {
    if (session.answer_source != AnswerSource::agent) {
        throw PreconditionError("answers for human sessions arrive through the service");
    }
    const auto& tpl = builtin_template(template_for(PromptKind::yesno_answer, session.lang));
    auto req = render_prompt(tpl, {{"question", question},
                                   {"text", session.subtitles_blob},
                                   {"initial_question", session.dialogue.initial_question}});
    auto reply = chat_.chat(req);
    if (auto a = parse_yes_no(reply)) return *a;

    req.user += session.lang == Language::zh ? "\n\n请只回答“是”或“否”。" : "\n\nReply with only \"yes\" or \"no\".";
    auto retry = chat_.chat(req);
    if (auto a = parse_yes_no(retry)) return *a;
    throw AnswerError("unparseable yes/no replies: '" + reply + "', '" + retry + "'");
}

Dialogue Interactor::run_chat(const std::string& question, const std::vector<VideoSegment>& segments,
                              const std::optional<std::string>& description_spans) {
    ChatSession session;
    session.dialogue.initial_question = question;
    session.lang = opts_.lang;
    if (!opts_.toggles.chatting) return session.dialogue;
    if (opts_.rounds < 1) throw PreconditionError("run_chat requires rounds >= 1");
    if (segments.empty()) throw PreconditionError("run_chat requires segments");

    session.subtitles_blob = subtitles_blob(segments);
    session.description_spans = description_spans;
    while (session.round < opts_.rounds) {
        int r = session.round + 1;
        try {
            auto q = ask_further_question(session);
            auto a = answer_question(q, session);
            session.record(std::move(q), a);
        } catch (const std::exception& e) {
            throw RoundError(r, e.what());
        }
    }
    return session.dialogue;
}

std::string Interactor::rewrite_question(const Dialogue& dialogue) {
    if (!opts_.toggles.rewriting) return dialogue.initial_question;
    const auto& tpl = builtin_template(template_for(PromptKind::dialogue_summary, opts_.lang));
    auto req = render_prompt(tpl, {{"question", dialogue.initial_question}, {"dialogue", format_dialogue(dialogue)}});
    return std::string(trim_view(chat_.chat(req)));
}

std::string Interactor::rewrite_subtitle(const VideoSegment& segment, const std::string& all_subtitles) {
    if (segment.subtitle.empty()) throw PreconditionError("segment " + std::to_string(segment.seg_id) + " has no subtitle");
    if (!opts_.toggles.rewriting) return segment.subtitle;
    const auto& tpl = builtin_template(template_for(PromptKind::subtitle_describe, opts_.lang));
    auto req = render_prompt(tpl, {{"all_subtitles", all_subtitles}, {"subtitle", segment.subtitle}});
    try {
        return std::string(trim_view(chat_.chat(req)));
    } catch (const std::exception& e) {
        throw StageError("rewrite_subtitle", "segment " + std::to_string(segment.seg_id) + ": " + e.what());
    }
}

void Interactor::rewrite_subtitles(std::vector<VideoSegment>& segments) {
    if (!opts_.toggles.rewriting) return;
    auto blob = subtitles_blob(segments);
    parallel_for(segments.size(), opts_.max_in_flight,
                 [&](std::size_t i) { segments[i].description = rewrite_subtitle(segments[i], blob); });
}

}  // namespace inval
