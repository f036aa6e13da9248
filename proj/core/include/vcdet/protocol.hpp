#pragma once

#include "vcdet/provider.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vcdet {

/// Byte transport carrying newline-delimited JSON messages.
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void write_line(const std::string& line) = 0;
  /// Next line without the trailing newline; nullopt on end of stream.
  virtual std::optional<std::string> read_line() = 0;
};

/// Child process speaking the protocol on its stdin/stdout. The argv string is
/// split on whitespace; no shell is involved.
class SubprocessTransport final : public LineTransport {
 public:
  explicit SubprocessTransport(const std::string& argv);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line() override;

 private:
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

class TcpTransport final : public LineTransport {
 public:
  TcpTransport(const std::string& host, int port);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void write_line(const std::string& line) override;
  std::optional<std::string> read_line() override;

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// Client side of the wire protocol. Each call sends
///   {"id": n, "op": "...", "params": {...}}
/// and expects exactly one {"id": n, "ok": true, "result": ...} or
/// {"id": n, "ok": false, "error": {"code", "message"}} in order.
/// The constructor performs the hello handshake and rejects protocol
/// version mismatches.
class RemoteProvider final : public EmbeddingProvider {
 public:
  explicit RemoteProvider(std::unique_ptr<LineTransport> transport);

  ProviderInfo hello() override;
  std::vector<RleMask> segment_frame(const FrameRef& frame) override;
  RleMask refine_mask(const FrameRef& frame, const PixelBox& prompt) override;
  Embedding embed_crop(const CropEmbedRequest& request) override;
  std::vector<Embedding> embed_text(const std::vector<std::string>& prompts) override;

 private:
  struct Reply;
  std::string call(const std::string& op, const std::string& params_json);

  std::unique_ptr<LineTransport> transport_;
  std::int64_t next_id_ = 1;
  ProviderInfo info_;
};

/// Answers one request line with one response line using `provider`.
/// Malformed input produces an error response with a null id.
std::string handle_request_line(EmbeddingProvider& provider, const std::string& line);

/// Serves requests from `in` to `out` until end of stream.
void serve_stream(EmbeddingProvider& provider, std::istream& in, std::ostream& out);

}  // namespace vcdet
