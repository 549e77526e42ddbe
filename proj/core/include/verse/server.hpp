#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "verse/session.hpp"

namespace verse::service {

/// Loads `lm.bin`, `lexicon.dict` and every `styles/*.json` under `dir`.
std::shared_ptr<Models> load_models(const std::filesystem::path& dir);

/// {code, message, details}
nlohmann::json error_envelope(const std::string& code, const std::string& message,
                              const nlohmann::json& details = nlohmann::json::object());
/// HTTP status for an error code.
int http_status(const std::string& code);

/// HTTP/JSON facade over a SessionManager. Style builds read the background
/// corpus from `background.json` in the models directory.
class Server {
 public:
  explicit Server(const std::filesystem::path& models_dir);
  ~Server();

  /// Binds without serving; port 0 picks a free port. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  void stop();
  void wait_until_ready() const;

  SessionManager& sessions();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace verse::service
