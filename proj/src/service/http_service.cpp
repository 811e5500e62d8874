#include <thread>

#include <httplib.h>

#include "inval/service.hpp"

namespace inval {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void send_json(httplib::Response& res, int status, const ordered_json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& stage,
                const std::string& message) {
    ordered_json err = {{"code", code}, {"stage", stage.empty() ? ordered_json(nullptr) : ordered_json(stage)},
                        {"message", message}};
    send_json(res, status, {{"error", std::move(err)}});
}

class BadRequest : public Error {
public:
    using Error::Error;
};

json parse_body(const httplib::Request& req) {
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw BadRequest("request body must be a JSON object");
        return j;
    } catch (const json::exception& e) {
        throw BadRequest(std::string("invalid JSON body: ") + e.what());
    }
}

std::string string_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw BadRequest(std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

ordered_json segments_json(const std::string& video_id, const std::vector<VideoSegment>& segments) {
    ordered_json list = ordered_json::array();
    for (const auto& s : segments) {
        list.push_back({
            {"seg_id", s.seg_id},
            {"start_s", s.start_s},
            {"duration_s", s.duration_s},
            {"subtitle", s.subtitle},
            {"description", s.description ? ordered_json(*s.description) : ordered_json(nullptr)},
        });
    }
    return {{"video_id", video_id}, {"segments", std::move(list)}};
}

// Runs a handler and turns exceptions into the error body.
template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const BadRequest& e) {
            send_error(res, 400, "bad_request", "", e.what());
        } catch (const ParseError& e) {
            send_error(res, 400, "bad_request", "ingest", e.what());
        } catch (const PreconditionError& e) {
            send_error(res, 400, "bad_request", "", e.what());
        } catch (const NotFoundError& e) {
            send_error(res, 404, "not_found", "", e.what());
        } catch (const ConflictError& e) {
            send_error(res, 409, "conflict", "", e.what());
        } catch (const StageError& e) {
            send_error(res, 502, "stage_failed", e.stage(), e.what());
        } catch (const ProviderError& e) {
            send_error(res, 502, "provider_error", "", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", "", e.what());
        }
    };
}

}  // namespace

struct HttpService::Impl {
    SessionManager& sessions;
    httplib::Server server;
    std::thread thread;

    explicit Impl(SessionManager& s) : sessions(s) { routes(); }

    void routes() {
        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok", "text/plain");
        });

        server.Post("/api/videos", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            auto video_id = string_field(body, "video_id");
            auto subtitles = string_field(body, "subtitles");
            std::optional<SubtitleFormat> format;
            if (body.contains("format") && !body["format"].is_null()) {
                format = parse_subtitle_format(string_field(body, "format"));
                if (!format) throw BadRequest("field 'format' must be srt or vtt");
            }
            send_json(res, 201, segments_json(video_id, sessions.add_video(video_id, subtitles, format)));
        }));

        server.Get("/api/videos/:id/segments", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto& id = req.path_params.at("id");
            send_json(res, 200, segments_json(id, sessions.segments(id)));
        }));

        server.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto body = parse_body(req);
            std::optional<int> top_k;
            if (body.contains("top_k") && !body["top_k"].is_null()) {
                if (!body["top_k"].is_number_integer()) throw BadRequest("field 'top_k' must be an integer");
                top_k = body["top_k"].get<int>();
            }
            auto lang = Language::en;
            if (body.contains("lang")) {
                auto l = parse_language(string_field(body, "lang"));
                if (!l) throw BadRequest("field 'lang' must be en or zh");
                lang = *l;
            }
            auto s = sessions.create_session(string_field(body, "video_id"), string_field(body, "question"), top_k,
                                             lang);
            send_json(res, 201, session_to_json(s));
        }));

        server.Post("/api/sessions/:id/answer", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto a = string_field(parse_body(req), "answer");
            if (a != "yes" && a != "no") throw BadRequest("field 'answer' must be \"yes\" or \"no\"");
            auto s = sessions.submit_answer(req.path_params.at("id"), a == "yes" ? Answer::yes : Answer::no);
            send_json(res, 200, session_to_json(s));
        }));

        server.Post("/api/sessions/:id/localize", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, session_to_json(sessions.localize(req.path_params.at("id"))));
        }));

        server.Get("/api/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, session_to_json(sessions.get(req.path_params.at("id"))));
        }));

        server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
            if (!res.body.empty()) return;
            if (res.status == 404) send_error(res, 404, "not_found", "", "no route for " + req.method + " " + req.path);
            else send_error(res, res.status, "http_error", "", httplib::status_message(res.status));
        });
    }
};

HttpService::HttpService(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) {}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
    int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpService::stop() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace inval
