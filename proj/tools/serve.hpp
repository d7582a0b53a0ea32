#pragma once

#include <filesystem>
#include <istream>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "app.hpp"

namespace shardmemo::cli {

// Newline-delimited JSON protocol. Each request line is an object with an
// "op" field (read, write, write_a, stats, snapshot, ping) or a bare Request,
// which is treated as a read. Each reply is {"ok": true, "result": ...} or
// {"ok": false, "error": {"code": ..., "message": ...}}, echoing "id" when given.
class Server {
 public:
  explicit Server(App& app) : app_(app) {}

  nlohmann::json handle(const nlohmann::json& msg);
  std::string handle_line(const std::string& line);

  /// Serves one stream until end of input.
  void serve_stream(std::istream& in, std::ostream& out);
  /// Accepts connections on a Unix domain socket, one thread per client.
  /// Returns after `max_clients` connections have finished (0: never).
  void serve_socket(const std::filesystem::path& path, std::size_t max_clients = 0);

 private:
  App& app_;
  std::mutex write_mu_;  // writes and snapshots are serialised; reads run concurrently
};

}  // namespace shardmemo::cli
