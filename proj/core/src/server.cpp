#include "verse/server.hpp"

#include <fstream>
#include <iostream>
#include <regex>

#include <httplib.h>

#include "verse/corpus.hpp"
#include "verse/error.hpp"

namespace verse::service {

using nlohmann::json;

std::shared_ptr<Models> load_models(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("missing_directory", "models directory not found: " + dir.string());
  auto m = std::make_shared<Models>();
  m->lm = lm::load_model(dir / "lm.bin");
  m->lexicon = fst::PronLexicon::load(dir / "lexicon.dict");
  const auto styles = dir / "styles";
  if (std::filesystem::is_directory(styles)) {
    for (const auto& e : std::filesystem::directory_iterator(styles)) {
      if (e.path().extension() != ".json") continue;
      m->styles.emplace(e.path().stem().string(), std::make_shared<style::StyleModel>(style::load_style(e.path())));
    }
  }
  return m;
}

json error_envelope(const std::string& code, const std::string& message, const json& details) {
  return {{"code", code}, {"message", message}, {"details", details}};
}

int http_status(const std::string& code) {
  if (code == "unknown_style" || code == "unknown_session" || code == "not_found") return 404;
  if (code == "stale_candidate" || code == "poem_complete" || code == "nothing_to_undo" ||
      code == "nothing_to_redo" || code == "style_exists") {
    return 409;
  }
  if (code == "exhausted") return 422;
  if (code == "io_error" || code == "internal") return 500;
  return 400;
}

namespace {

style::StyleConfig style_config_from_json(const json& j) {
  static const std::set<std::string> known = {"n_percent", "select_topics", "topics",     "alpha",
                                              "beta",      "iterations",    "words_per_topic", "embed_dim",
                                              "window",    "neighbor_k",    "neighbor_decay",  "bigrams",
                                              "seed"};
  if (!j.is_object()) throw Error("invalid_request", "config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw Error("invalid_request", "unknown style config field '" + k + "'");
  }
  style::StyleConfig c;
  try {
    c.n_percent = j.value("n_percent", c.n_percent);
    c.select_topics = j.value("select_topics", c.select_topics);
    c.topics = j.value("topics", c.topics);
    c.alpha = j.value("alpha", c.alpha);
    c.beta = j.value("beta", c.beta);
    c.iterations = j.value("iterations", c.iterations);
    c.words_per_topic = j.value("words_per_topic", c.words_per_topic);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.window = j.value("window", c.window);
    c.neighbor_k = j.value("neighbor_k", c.neighbor_k);
    c.neighbor_decay = j.value("neighbor_decay", c.neighbor_decay);
    c.bigrams = j.value("bigrams", c.bigrams);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error("invalid_request", std::string("bad style config: ") + e.what());
  }
  return c;
}

json style_summary(const std::string& id, const style::StyleModel& s) {
  return {{"id", id},
          {"author_id", s.author_id},
          {"high_entropy_terms", s.high_entropy_terms.size()},
          {"topic_words", s.topic_words.size()},
          {"expanded_terms", s.expanded_terms.size()}};
}

bool valid_id(const std::string& id) {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, re);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error("invalid_json", std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string sse(const std::string& event, const json& data) { return "event: " + event + "\ndata: " + data.dump() + "\n\n"; }

}  // namespace

struct Server::Impl {
  std::filesystem::path dir;
  std::shared_ptr<Models> models;
  std::unique_ptr<SessionManager> sessions;
  httplib::Server http;
  std::mutex build_mutex;

  void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  void send_error(httplib::Response& res, const std::string& code, const std::string& message,
                  const json& details = json::object()) {
    send_json(res, error_envelope(code, message, details), http_status(code));
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const gen::GenerationError& e) {
        send_error(res, e.code(), e.what(), e.details());
      } catch (const Error& e) {
        send_error(res, e.code(), e.what());
      } catch (const json::exception& e) {
        send_error(res, "invalid_request", e.what());
      } catch (const std::exception& e) {
        send_error(res, "internal", e.what());
      }
    };
  }

  style::StyleModel build_style(const json& body, const style::ProgressFn& progress) {
    const std::string id = body.value("id", std::string());
    if (!valid_id(id)) throw Error("invalid_request", "style id must match [A-Za-z0-9_-]{1,64}");
    const auto& docs = body.at("documents");
    if (!docs.is_array() || docs.empty()) throw Error("invalid_request", "documents must be a non-empty array");
    std::vector<corpus::Document> documents;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const std::string name = docs[i].value("name", "doc" + std::to_string(i));
      documents.push_back(corpus::make_document(std::filesystem::path(name).stem().string(),
                                                docs[i].at("text").get<std::string>()));
    }
    const auto author = corpus::Corpus::from_documents(id, std::move(documents));
    const auto bg_path = dir / "background.json";
    if (!std::filesystem::exists(bg_path)) {
      throw Error("missing_background", "models directory has no background.json corpus");
    }
    const auto background = corpus::load_corpus(bg_path);
    const auto config = style_config_from_json(body.value("config", json::object()));
    std::lock_guard lock(build_mutex);
    auto model = style::build_style_model(author, background, config, progress);
    std::filesystem::create_directories(dir / "styles");
    style::save_style(model, dir / "styles" / (id + ".json"));
    sessions->add_style(id, std::make_shared<style::StyleModel>(model));
    return model;
  }

  void routes() {
    http.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
      const auto& shape = models->lm.params.shape;
      send_json(res, {{"status", "ok"},
                      {"styles", sessions->style_ids().size()},
                      {"sessions", sessions->list().size()},
                      {"lexicon_words", models->lexicon.size()},
                      {"lm", {{"layers", shape.layers}, {"hidden", shape.hidden}, {"vocab", shape.vocab}}}});
    }));

    http.Get("/api/styles", guarded([this](const httplib::Request&, httplib::Response& res) {
      json list = json::array();
      for (const auto& id : sessions->style_ids()) list.push_back(style_summary(id, *sessions->style(id)));
      send_json(res, {{"styles", list}});
    }));

    http.Post("/api/styles", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      const bool stream = req.get_header_value("Accept").find("text/event-stream") != std::string::npos ||
                          req.get_param_value("stream") == "1";
      if (!stream) {
        const auto model = build_style(body, {});
        send_json(res, style_summary(body.at("id").get<std::string>(), model), 201);
        return;
      }
      res.status = 200;
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, body](std::size_t, httplib::DataSink& sink) {
        auto emit = [&](const std::string& chunk) { sink.write(chunk.data(), chunk.size()); };
        try {
          const auto model = build_style(body, [&](std::string_view stage) {
            emit(sse("progress", {{"stage", std::string(stage)}}));
          });
          emit(sse("result", style_summary(body.at("id").get<std::string>(), model)));
        } catch (const Error& e) {
          emit(sse("error", error_envelope(e.code(), e.what())));
        } catch (const std::exception& e) {
          emit(sse("error", error_envelope("internal", e.what())));
        }
        sink.done();
        return true;
      });
    }));

    http.Get("/api/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"sessions", sessions->list()}});
    }));

    http.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, sessions->create(parse_body(req)), 201);
    }));

    http.Get(R"(/api/sessions/([0-9a-f]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, sessions->get(req.matches[1]));
    }));

    http.Post(R"(/api/sessions/([0-9a-f]+)/candidates)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                send_json(res, sessions->request_candidates(req.matches[1], body.value("count", 5)));
              }));

    http.Post(R"(/api/sessions/([0-9a-f]+)/accept)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                send_json(res, sessions->accept(req.matches[1], parse_body(req)));
              }));

    http.Post(R"(/api/sessions/([0-9a-f]+)/undo)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, sessions->undo(req.matches[1]));
    }));

    http.Post(R"(/api/sessions/([0-9a-f]+)/redo)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, sessions->redo(req.matches[1]));
    }));

    auto export_handler = guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "text";
      const std::string body = sessions->export_as(req.matches[1], format);
      const char* type = format == "json" ? "application/json" : format == "markdown" ? "text/markdown" : "text/plain";
      res.set_content(body, std::string(type) + "; charset=utf-8");
    });
    http.Post(R"(/api/sessions/([0-9a-f]+)/export)", export_handler);
    http.Get(R"(/api/sessions/([0-9a-f]+)/export)", export_handler);

    http.set_error_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        res.set_content(error_envelope("not_found", "no route for " + req.method + " " + req.path).dump(),
                        "application/json");
      }
    });
  }
};

Server::Server(const std::filesystem::path& models_dir) : impl_(std::make_unique<Impl>()) {
  impl_->dir = models_dir;
  impl_->models = load_models(models_dir);
  impl_->sessions = std::make_unique<SessionManager>(impl_->models, models_dir / "sessions");
  impl_->routes();
}

Server::~Server() = default;

int Server::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->http.bind_to_any_port(host);
    if (p < 0) throw Error("io_error", "cannot bind " + host);
    return p;
  }
  if (!impl_->http.bind_to_port(host, port)) throw Error("io_error", "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Server::run() { impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

SessionManager& Server::sessions() { return *impl_->sessions; }

}  // namespace verse::service
