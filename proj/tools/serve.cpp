#include "serve.hpp"

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cstring>
#include <thread>
#include <vector>

#include "shardmemo/error.hpp"
#include "shardmemo/json_io.hpp"
#include "shardmemo/snapshot.hpp"

namespace shardmemo::cli {

namespace {

Json error_reply(const std::string& code, const std::string& message) {
  return Json{{"ok", false}, {"error", {{"code", code}, {"message", message}}}};
}

bool write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace

Json Server::handle(const Json& msg) {
  Json reply;
  try {
    if (!msg.is_object()) throw Error(ErrorCode::ParseError, "message must be a JSON object");
    const std::string op = msg.contains("op") ? msg.at("op").get<std::string>() : "read";
    if (op == "read") {
      const Json& body = msg.contains("op") ? required_field(msg, "request", "read message") : msg;
      if (msg.contains("op")) reject_unknown_fields(msg, {"op", "id", "request"}, "read message");
      const Request q = request_from_json(body);
      reply = Json{{"ok", true}, {"result", to_json(app_.service().read(q), q.request_id)}};
    } else if (op == "write") {
      reject_unknown_fields(msg, {"op", "id", "item"}, "write message");
      MemoryItem item = memory_item_from_json(required_field(msg, "item", "write message"), &app_.embedder());
      std::lock_guard lock(write_mu_);
      const ShardId shard = app_.service().store().write_item(std::move(item));
      app_.service().store().flush();
      reply = Json{{"ok", true}, {"result", {{"shard", shard}}}};
    } else if (op == "write_a") {
      reject_unknown_fields(msg, {"op", "id", "entry"}, "write_a message");
      std::lock_guard lock(write_mu_);
      app_.service().working().write_a(working_entry_from_json(required_field(msg, "entry", "write_a message")));
      reply = Json{{"ok", true}, {"result", Json::object()}};
    } else if (op == "stats") {
      Service& svc = app_.service();
      Json result{{"items", svc.store().size()}, {"shards", svc.store().shard_count()}, {"reads", svc.metrics().size()}};
      if (svc.metrics().size() > 0) result["metrics"] = cli::to_json(svc.metrics().aggregate());
      reply = Json{{"ok", true}, {"result", result}};
    } else if (op == "snapshot") {
      std::lock_guard lock(write_mu_);
      app_.save_store();
      reply = Json{{"ok", true}, {"result", Json::object()}};
    } else if (op == "ping") {
      reply = Json{{"ok", true}, {"result", "pong"}};
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown op '" + op + "'");
    }
  } catch (const Error& e) {
    reply = error_reply(std::string(to_string(e.code())), e.what());
  } catch (const nlohmann::json::exception& e) {
    reply = error_reply("ParseError", e.what());
  }
  if (msg.is_object() && msg.contains("id")) reply["id"] = msg.at("id");
  return reply;
}

std::string Server::handle_line(const std::string& line) {
  Json msg;
  try {
    msg = Json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    return error_reply("ParseError", e.what()).dump();
  }
  return handle(msg).dump();
}

void Server::serve_stream(std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << handle_line(line) << '\n' << std::flush;
  }
}

void Server::serve_socket(const std::filesystem::path& path, std::size_t max_clients) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw Error(ErrorCode::IoError, std::string("socket: ") + std::strerror(errno));
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string p = path.string();
  if (p.size() >= sizeof(addr.sun_path)) throw Error(ErrorCode::InvalidArgument, "socket path too long");
  std::memcpy(addr.sun_path, p.c_str(), p.size() + 1);
  ::unlink(p.c_str());
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw Error(ErrorCode::IoError, "cannot listen on " + p + ": " + err);
  }
  std::vector<std::thread> clients;
  for (std::size_t served = 0; max_clients == 0 || served < max_clients; ++served) {
    const int client = ::accept(fd, nullptr, nullptr);
    if (client < 0) {
      if (errno == EINTR) continue;
      break;
    }
    clients.emplace_back([this, client] {
      std::string buf;
      char chunk[4096];
      ssize_t n;
      while ((n = ::read(client, chunk, sizeof chunk)) > 0) {
        buf.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while ((nl = buf.find('\n')) != std::string::npos) {
          const std::string line = buf.substr(0, nl);
          buf.erase(0, nl + 1);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          if (!write_all(client, handle_line(line) + "\n")) break;
        }
      }
      ::close(client);
    });
  }
  for (auto& t : clients) t.join();
  ::close(fd);
  ::unlink(p.c_str());
}

}  // namespace shardmemo::cli
