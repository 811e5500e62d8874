#include <ctime>
#include <random>

#include "inval/interact.hpp"
#include "inval/pipeline.hpp"
#include "inval/service.hpp"
#include "inval/util.hpp"

namespace inval {

using nlohmann::ordered_json;

std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::awaiting_answer: return "awaiting_answer";
        case SessionState::ready: return "ready";
        case SessionState::localized: return "localized";
        case SessionState::failed: return "failed";
    }
    return "failed";
}

bool transition_allowed(SessionState from, SessionState to) {
    if (from == to) return true;
    switch (from) {
        case SessionState::awaiting_answer: return to == SessionState::ready;
        case SessionState::ready: return to == SessionState::localized || to == SessionState::failed;
        default: return false;
    }
}

namespace {

std::string iso8601(Clock::time_point t) {
    auto secs = Clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

template <class T>
ordered_json opt(const std::optional<T>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string new_session_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lk(mu);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

template <class Fn>
auto in_stage(const char* stage, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

ordered_json session_to_json(const Session& s) {
    ordered_json dialogue = ordered_json::array();
    for (const auto& t : s.dialogue.turns) dialogue.push_back({{"q", t.question}, {"a", to_string(t.answer)}});

    ordered_json result = nullptr;
    if (s.result) {
        ordered_json per = ordered_json::array();
        for (const auto& p : s.result->per_segment) {
            per.push_back({{"seg_id", p.seg_id}, {"prob", p.prob}, {"label", p.label}});
        }
        result = {
            {"video_id", s.result->video_id},
            {"span", {{"start_s", s.result->span.start_s}, {"end_s", s.result->span.end_s}}},
            {"per_segment", std::move(per)},
            {"fallback_used", s.result->fallback_used},
        };
    }
    ordered_json failure = nullptr;
    if (s.state == SessionState::failed) failure = {{"stage", s.failed_stage}, {"message", s.failure}};

    return {
        {"session_id", s.session_id},
        {"video_id", s.video_id},
        {"state", to_string(s.state)},
        {"question", s.dialogue.initial_question},
        {"lang", to_string(s.lang)},
        {"round", s.dialogue.turns.size()},
        {"rounds", s.rounds},
        {"top_k", s.top_k},
        {"dialogue", std::move(dialogue)},
        {"pending_question", opt(s.pending_question)},
        {"question_description", opt(s.question_description)},
        {"result", std::move(result)},
        {"failure", std::move(failure)},
        {"created_at", iso8601(s.created_at)},
    };
}

SessionManager::SessionManager(ProviderSet& providers, ServiceOptions opts, std::optional<DetectorParams> detector,
                               std::optional<RelevanceHead> head)
    : providers_(providers), opts_(std::move(opts)), detector_(std::move(detector)), head_(std::move(head)) {
    if (auto v = validate_config(opts_.cfg); !v.empty()) throw PreconditionError(v.front());
}

std::vector<VideoSegment> SessionManager::add_video(const std::string& video_id, std::string_view subtitles,
                                                    std::optional<SubtitleFormat> format) {
    if (trim_view(video_id).empty()) throw PreconditionError("video_id must not be empty");
    {
        std::lock_guard lk(mu_);
        if (videos_.contains(video_id)) throw ConflictError("video " + video_id + " already exists");
    }
    auto v = std::make_shared<Video>();
    v->segments = align_segments(merge_dedupe(parse_subtitles(subtitles, format)), video_id);
    for (auto& seg : v->segments) seg.visual_feature_ref = static_cast<std::uint32_t>(seg.seg_id);
    v->blob = subtitles_blob(v->segments);
    if (opts_.cfg.toggles.rewriting) {
        Interactor it(*providers_.chat, {opts_.cfg.rounds, opts_.cfg.toggles, Language::en, opts_.max_in_flight});
        in_stage("rewrite_subtitle", [&] {
            it.rewrite_subtitles(v->segments);
            return 0;
        });
    }

    std::lock_guard lk(mu_);
    if (!videos_.emplace(video_id, v).second) throw ConflictError("video " + video_id + " already exists");
    return v->segments;
}

std::shared_ptr<const SessionManager::Video> SessionManager::video(const std::string& video_id) const {
    std::lock_guard lk(mu_);
    auto it = videos_.find(video_id);
    if (it == videos_.end()) throw NotFoundError("unknown video " + video_id);
    return it->second;
}

std::vector<VideoSegment> SessionManager::segments(const std::string& video_id) const {
    return video(video_id)->segments;
}

std::shared_ptr<SessionManager::Entry> SessionManager::entry(const std::string& session_id) {
    expire();
    std::lock_guard lk(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
    return it->second;
}

std::string SessionManager::ask(const Session& s, const Video& v) {
    Interactor it(*providers_.chat, {s.rounds, opts_.cfg.toggles, s.lang, opts_.max_in_flight});
    ChatSession cs;
    cs.dialogue = s.dialogue;
    cs.round = static_cast<int>(s.dialogue.turns.size());
    cs.subtitles_blob = v.blob;
    cs.answer_source = AnswerSource::human;
    cs.lang = s.lang;
    return in_stage("chat", [&] { return it.ask_further_question(cs); });
}

Session SessionManager::create_session(const std::string& video_id, const std::string& question,
                                       std::optional<int> top_k, Language lang) {
    expire();
    if (trim_view(question).empty()) throw PreconditionError("question must not be empty");
    if (top_k && *top_k < 1) throw PreconditionError("top_k must be >= 1");
    auto v = video(video_id);

    Session s;
    s.session_id = new_session_id();
    s.video_id = video_id;
    s.dialogue.initial_question = question;
    s.lang = lang;
    s.rounds = opts_.cfg.toggles.chatting ? opts_.cfg.rounds : 0;
    s.top_k = top_k.value_or(opts_.cfg.top_k);
    s.created_at = s.last_used = opts_.now();
    if (s.rounds == 0) {
        s.state = SessionState::ready;
    } else {
        try {
            s.pending_question = ask(s, *v);
            s.state = SessionState::awaiting_answer;
        } catch (const StageError& e) {
            s.state = SessionState::failed;
            s.failed_stage = e.stage();
            s.failure = e.what();
        }
    }

    auto e = std::make_shared<Entry>();
    e->session = s;
    std::lock_guard lk(mu_);
    sessions_.emplace(s.session_id, std::move(e));
    return s;
}

Session SessionManager::submit_answer(const std::string& session_id, Answer answer) {
    auto e = entry(session_id);
    std::lock_guard lk(e->mu);
    auto& s = e->session;
    if (s.state != SessionState::awaiting_answer) {
        throw ConflictError("session is " + std::string(to_string(s.state)) + ", not awaiting_answer");
    }
    auto v = video(s.video_id);

    Session next = s;
    next.dialogue.turns.push_back({*s.pending_question, answer});
    next.last_used = opts_.now();
    if (static_cast<int>(next.dialogue.turns.size()) < next.rounds) {
        next.pending_question = ask(next, *v);
    } else {
        next.pending_question.reset();
        next.state = SessionState::ready;
    }
    s = std::move(next);
    return s;
}

void SessionManager::run_localize(Session& s, const Video& v) {
    const auto& cfg = opts_.cfg;
    InValSample sample;
    sample.sample_id = s.session_id;
    sample.video_id = s.video_id;
    sample.lang = s.lang;
    sample.question = s.dialogue.initial_question;
    sample.dialogue = s.dialogue;
    sample.segments = v.segments;
    if (cfg.toggles.rewriting) {
        Interactor it(*providers_.chat, {s.rounds, cfg.toggles, s.lang, opts_.max_in_flight});
        sample.question_description = in_stage("rewrite_question", [&] { return it.rewrite_question(s.dialogue); });
    }
    if (sample.segments.size() >= 2) {
        in_stage("search", [&] {
            ContextOptions co{s.top_k, cfg.toggles.searching, opts_.max_in_flight};
            top_k_context(sample.segments, sample.question, head_ ? &*head_ : nullptr, co, *providers_.embedder);
            return 0;
        });
    }
    if (!detector_) throw StageError("detector", "no detector loaded");
    auto result = in_stage("detector", [&] {
        return localize_sample(sample, *detector_, cfg, *providers_.embedder, providers_.visual.get(),
                               opts_.max_in_flight);
    });
    s.question_description = sample.question_description;
    s.result = std::move(result);
}

Session SessionManager::localize(const std::string& session_id) {
    auto e = entry(session_id);
    std::lock_guard lk(e->mu);
    auto& s = e->session;
    s.last_used = opts_.now();
    if (s.state == SessionState::localized) return s;
    if (s.state != SessionState::ready) {
        throw ConflictError("session is " + std::string(to_string(s.state)) + ", not ready");
    }
    auto v = video(s.video_id);
    try {
        run_localize(s, *v);
        s.state = SessionState::localized;
    } catch (const StageError& err) {
        s.state = SessionState::failed;
        s.failed_stage = err.stage();
        s.failure = err.what();
    }
    return s;
}

Session SessionManager::get(const std::string& session_id) {
    auto e = entry(session_id);
    std::lock_guard lk(e->mu);
    e->session.last_used = opts_.now();
    return e->session;
}

std::size_t SessionManager::expire() {
    const auto cutoff = opts_.now() - opts_.session_ttl;
    std::lock_guard lk(mu_);
    std::size_t removed = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        std::unique_lock elk(it->second->mu, std::try_to_lock);
        // A session busy with a request is in use, so it is not idle.
        if (elk.owns_lock() && it->second->session.last_used < cutoff) {
            elk.unlock();
            it = sessions_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

std::size_t SessionManager::session_count() const {
    std::lock_guard lk(mu_);
    return sessions_.size();
}

}  // namespace inval
