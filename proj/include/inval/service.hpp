#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inval/app_config.hpp"
#include "inval/detector.hpp"
#include "inval/errors.hpp"
#include "inval/localizer.hpp"
#include "inval/relevance.hpp"
#include "inval/subtitles.hpp"
#include "inval/types.hpp"

namespace inval {

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// The operation does not apply to the session's current state.
class ConflictError : public Error {
public:
    using Error::Error;
};

enum class SessionState { awaiting_answer, ready, localized, failed };

std::string_view to_string(SessionState s);
/// Transitions a session may take after creation; a state may also stay where it is.
bool transition_allowed(SessionState from, SessionState to);

using Clock = std::chrono::system_clock;

struct Session {
    std::string session_id;
    std::string video_id;
    SessionState state = SessionState::awaiting_answer;
    Dialogue dialogue;
    std::optional<std::string> pending_question;
    std::optional<std::string> question_description;
    std::optional<LocalizationResult> result;
    Language lang = Language::en;
    int rounds = 3;
    int top_k = 3;
    /// Set once the session has failed.
    std::string failed_stage;
    std::string failure;
    Clock::time_point created_at;
    Clock::time_point last_used;
};

nlohmann::ordered_json session_to_json(const Session& s);

struct ServiceOptions {
    PipelineConfig cfg;
    std::chrono::minutes session_ttl{30};
    int max_in_flight = 4;
    /// Replaceable for tests.
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

/// Live sessions over videos ingested into the service. Videos and artifacts are shared and
/// read-only once added; each session is mutated by one request at a time.
class SessionManager {
public:
    SessionManager(ProviderSet& providers, ServiceOptions opts, std::optional<DetectorParams> detector,
                   std::optional<RelevanceHead> head);

    /// Parses, merges and aligns the subtitles and precomputes S'_i for every segment.
    /// Throws ParseError for bad subtitles and ConflictError for a known video_id.
    std::vector<VideoSegment> add_video(const std::string& video_id, std::string_view subtitles,
                                        std::optional<SubtitleFormat> format);
    std::vector<VideoSegment> segments(const std::string& video_id) const;

    /// Asks the first follow-up, or goes straight to ready with zero rounds.
    /// A provider failure yields a failed session rather than an exception.
    Session create_session(const std::string& video_id, const std::string& question,
                           std::optional<int> top_k = std::nullopt, Language lang = Language::en);
    /// Records the answer and asks the next follow-up, or moves to ready after the last round.
    /// When the next follow-up cannot be generated the session is left as it was and the
    /// StageError propagates, so the same answer can be resubmitted.
    Session submit_answer(const std::string& session_id, Answer answer);
    /// Idempotent once localized.
    Session localize(const std::string& session_id);
    Session get(const std::string& session_id);

    /// Drops sessions idle for longer than the TTL; returns how many were removed.
    std::size_t expire();
    std::size_t session_count() const;

private:
    struct Video {
        std::vector<VideoSegment> segments;
        std::string blob;
    };
    struct Entry {
        std::mutex mu;
        Session session;
    };

    std::shared_ptr<const Video> video(const std::string& video_id) const;
    std::shared_ptr<Entry> entry(const std::string& session_id);
    std::string ask(const Session& s, const Video& v);
    void run_localize(Session& s, const Video& v);

    ProviderSet& providers_;
    ServiceOptions opts_;
    std::optional<DetectorParams> detector_;
    std::optional<RelevanceHead> head_;

    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<const Video>> videos_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

/// JSON over HTTP in front of a SessionManager. Error bodies are
/// {"error": {"code", "stage", "message"}}.
class HttpService {
public:
    explicit HttpService(SessionManager& sessions);
    ~HttpService();

    /// Binds (port 0 picks a free one) and serves on a background thread; returns the port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace inval
