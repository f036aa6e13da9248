#include "vcdet/protocol.hpp"

#include "vcdet/error.hpp"

#include <nlohmann/json.hpp>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

using nlohmann::json;

namespace vcdet {

namespace {

void write_all(int fd, const std::string& data, bool socket) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = socket ? ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                             : ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProviderError(std::string("provider write failed: ") + std::strerror(errno), "IO");
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> read_line_fd(int fd, std::string& buffer) {
  for (;;) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProviderError(std::string("provider read failed: ") + std::strerror(errno), "IO");
    }
    if (n == 0) return std::nullopt;
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

std::vector<std::string> split_args(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

json frame_json(const FrameRef& f) {
  return {{"frame_id", f.frame_id}, {"image", f.image}, {"width", f.width}, {"height", f.height}};
}

FrameRef frame_from(const json& j) {
  FrameRef f;
  f.frame_id = j.at("frame_id").get<int>();
  f.image = j.value("image", std::string());
  f.width = j.value("width", 0);
  f.height = j.value("height", 0);
  return f;
}

json rle_json(const RleMask& m) { return {{"size", {m.height, m.width}}, {"counts", m.counts}}; }

RleMask rle_from(const json& j) {
  RleMask m;
  const auto size = j.at("size").get<std::vector<int>>();
  if (size.size() != 2) throw std::invalid_argument("mask size must be [H, W]");
  m.height = size[0];
  m.width = size[1];
  m.counts = j.at("counts").get<std::vector<std::uint32_t>>();
  return m;
}

json box_json(const PixelBox& b) { return json::array({b.xmin, b.ymin, b.xmax, b.ymax}); }

PixelBox box_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 4) throw std::invalid_argument("bbox must have 4 integers");
  return {v[0], v[1], v[2], v[3]};
}

}  // namespace

// ---------------------------------------------------------------------------
// transports

SubprocessTransport::SubprocessTransport(const std::string& argv) {
  const auto args = split_args(argv);
  if (args.empty()) throw ConfigError("provider command is empty");
  std::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
    throw ProviderError(std::string("pipe() failed: ") + std::strerror(errno), "IO");
  }
  std::vector<char*> cargv;
  for (const auto& a : args) cargv.push_back(const_cast<char*>(a.c_str()));
  cargv.push_back(nullptr);

  pid_ = ::fork();
  if (pid_ < 0) throw ProviderError(std::string("fork() failed: ") + std::strerror(errno), "IO");
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

SubprocessTransport::~SubprocessTransport() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    // The child should exit on EOF; give it a moment before killing it.
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
}

void SubprocessTransport::write_line(const std::string& line) { write_all(to_child_, line + "\n", false); }

std::optional<std::string> SubprocessTransport::read_line() { return read_line_fd(from_child_, buffer_); }

TcpTransport::TcpTransport(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
    throw ProviderError("cannot resolve " + host + ": " + ::gai_strerror(rc), "IO");
  }
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw ProviderError("cannot connect to " + host + ":" + port_str, "IO");
}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::write_line(const std::string& line) { write_all(fd_, line + "\n", true); }

std::optional<std::string> TcpTransport::read_line() { return read_line_fd(fd_, buffer_); }

// ---------------------------------------------------------------------------
// client

RemoteProvider::RemoteProvider(std::unique_ptr<LineTransport> transport) : transport_(std::move(transport)) {
  const json r = json::parse(call("hello", "{}"));
  try {
    info_.protocol_version = r.at("protocol_version").get<int>();
    info_.dim = r.at("dim").get<std::size_t>();
    info_.capabilities = r.value("capabilities", std::vector<std::string>{});
    info_.deterministic = r.value("deterministic", false);
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed hello response: ") + e.what(), "PROTO");
  }
  if (info_.protocol_version != kProtocolVersion) {
    throw ProviderError("provider speaks protocol version " + std::to_string(info_.protocol_version) +
                            ", expected " + std::to_string(kProtocolVersion),
                        "PROTO");
  }
  if (info_.dim == 0) throw ProviderError("provider announced dim 0", "PROTO");
}

std::string RemoteProvider::call(const std::string& op, const std::string& params_json) {
  const std::int64_t id = next_id_++;
  transport_->write_line("{\"id\":" + std::to_string(id) + ",\"op\":" + json(op).dump() +
                         ",\"params\":" + params_json + "}");
  const auto line = transport_->read_line();
  if (!line) throw ProviderError("provider closed the connection during '" + op + "'", "IO", id);
  json reply;
  try {
    reply = json::parse(*line);
  } catch (const json::parse_error& e) {
    throw ProviderError(std::string("provider sent invalid JSON: ") + e.what(), "PROTO", id);
  }
  if (!reply.is_object() || !reply.contains("id") || reply["id"] != id) {
    throw ProviderError("provider response id does not match request " + std::to_string(id), "PROTO", id);
  }
  if (!reply.value("ok", false)) {
    const json err = reply.value("error", json::object());
    throw ProviderError("provider error in '" + op + "' (request " + std::to_string(id) +
                            "): " + err.value("message", std::string("unknown")),
                        err.value("code", std::string("PROVIDER")), id);
  }
  if (!reply.contains("result")) throw ProviderError("provider response lacks result", "PROTO", id);
  return reply["result"].dump();
}

ProviderInfo RemoteProvider::hello() { return info_; }

std::vector<RleMask> RemoteProvider::segment_frame(const FrameRef& frame) {
  const json r = json::parse(call("segment_frame", json{{"frame", frame_json(frame)}}.dump()));
  std::vector<RleMask> out;
  try {
    for (const auto& m : r.at("masks")) out.push_back(rle_from(m));
  } catch (const std::exception& e) {
    throw ProviderError(std::string("malformed segment_frame result: ") + e.what(), "PROTO");
  }
  return out;
}

RleMask RemoteProvider::refine_mask(const FrameRef& frame, const PixelBox& prompt) {
  const json r = json::parse(call("refine_mask", json{{"frame", frame_json(frame)}, {"bbox", box_json(prompt)}}.dump()));
  try {
    return rle_from(r);
  } catch (const std::exception& e) {
    throw ProviderError(std::string("malformed refine_mask result: ") + e.what(), "PROTO");
  }
}

Embedding RemoteProvider::embed_crop(const CropEmbedRequest& request) {
  const json params{{"frame", frame_json(request.frame)},
                    {"mask", rle_json(request.mask)},
                    {"bbox", box_json(request.bbox)},
                    {"scale_index", request.scale_index}};
  const json r = json::parse(call("embed_crop", params.dump()));
  Embedding e;
  try {
    e = r.at("embedding").get<Embedding>();
  } catch (const json::exception& ex) {
    throw ProviderError(std::string("malformed embed_crop result: ") + ex.what(), "PROTO");
  }
  if (e.size() != info_.dim) {
    throw ProviderError("embed_crop returned dim " + std::to_string(e.size()) + ", announced " +
                            std::to_string(info_.dim),
                        "PROTO");
  }
  return e;
}

std::vector<Embedding> RemoteProvider::embed_text(const std::vector<std::string>& prompts) {
  const json r = json::parse(call("embed_text", json{{"prompts", prompts}}.dump()));
  std::vector<Embedding> out;
  try {
    out = r.at("embeddings").get<std::vector<Embedding>>();
  } catch (const json::exception& ex) {
    throw ProviderError(std::string("malformed embed_text result: ") + ex.what(), "PROTO");
  }
  if (out.size() != prompts.size()) throw ProviderError("embed_text returned wrong number of vectors", "PROTO");
  for (const auto& e : out) {
    if (e.size() != info_.dim) throw ProviderError("embed_text returned wrong dimension", "PROTO");
  }
  return out;
}

// ---------------------------------------------------------------------------
// server

std::string handle_request_line(EmbeddingProvider& provider, const std::string& line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error& e) {
    return json{{"id", nullptr}, {"ok", false}, {"error", {{"code", "PARSE"}, {"message", e.what()}}}}.dump();
  }
  if (!request.is_object() || !request.contains("id") || !request.contains("op")) {
    const json id = request.is_object() && request.contains("id") ? request["id"] : json(nullptr);
    return json{{"id", id}, {"ok", false}, {"error", {{"code", "PARSE"}, {"message", "request needs id and op"}}}}.dump();
  }
  const json id = request["id"];
  const json params = request.value("params", json::object());
  const auto fail = [&](const std::string& code, const std::string& message) {
    return json{{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}}.dump();
  };
  try {
    const std::string op = request["op"].get<std::string>();
    json result;
    if (op == "hello") {
      const ProviderInfo info = provider.hello();
      result = {{"protocol_version", info.protocol_version},
                {"dim", info.dim},
                {"capabilities", info.capabilities},
                {"deterministic", info.deterministic}};
    } else if (op == "segment_frame") {
      json masks = json::array();
      for (const auto& m : provider.segment_frame(frame_from(params.at("frame")))) masks.push_back(rle_json(m));
      result = {{"masks", masks}};
    } else if (op == "refine_mask") {
      result = rle_json(provider.refine_mask(frame_from(params.at("frame")), box_from(params.at("bbox"))));
    } else if (op == "embed_crop") {
      CropEmbedRequest r;
      r.frame = frame_from(params.at("frame"));
      if (params.contains("mask")) r.mask = rle_from(params["mask"]);
      r.bbox = box_from(params.at("bbox"));
      r.scale_index = params.value("scale_index", 0);
      result = {{"embedding", provider.embed_crop(r)}};
    } else if (op == "embed_text") {
      result = {{"embeddings", provider.embed_text(params.at("prompts").get<std::vector<std::string>>())}};
    } else {
      return fail("OP", "unknown op '" + op + "'");
    }
    return json{{"id", id}, {"ok", true}, {"result", result}}.dump();
  } catch (const ProviderError& e) {
    return fail(e.code(), e.what());
  } catch (const Error& e) {
    return fail("PROVIDER", e.what());
  } catch (const std::exception& e) {
    return fail("ARG", e.what());
  }
}

void serve_stream(EmbeddingProvider& provider, std::istream& in, std::ostream& out) {
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    out << handle_request_line(provider, line) << '\n';
    out.flush();
  }
}

}  // namespace vcdet
