#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pagpass/tokenizer.hpp"

namespace pagpass {

enum class Backend : std::uint8_t { kNGram = 1, kTransformer = 2 };

const char* backend_name(Backend b);

// Incremental decoding state: the tokens pushed so far plus whatever the
// backend caches to make the next distribution cheap.
class DecodeSession {
 public:
  virtual ~DecodeSession() = default;

  virtual std::size_t length() const = 0;
  // Distribution over the 135 tokens for the position after the last push.
  virtual std::span<const double> distribution() = 0;
  // Throws InvalidArgument when the window is full or id is out of range.
  virtual void push(TokenId id) = 0;
  virtual std::unique_ptr<DecodeSession> clone() const = 0;
};

// Pr(t_i | t_1 .. t_{i-1}) over the fixed vocabulary, where t_1 is <BOS>.
// Models are immutable after training; sessions may be created concurrently.
class NextTokenModel {
 public:
  virtual ~NextTokenModel() = default;

  virtual Backend backend() const = 0;
  virtual std::size_t window() const = 0;
  virtual RuleFormat format() const = 0;

  // Requires 1 <= |context| <= window() and context[0] == <BOS>.
  virtual std::unique_ptr<DecodeSession> start(std::span<const TokenId> context) const = 0;

  // Convenience wrapper around start(); same preconditions.
  std::vector<double> next_distribution(std::span<const TokenId> context) const;

  // Free-form provenance (JSON text) stored in the checkpoint header.
  const std::string& metadata() const { return metadata_; }
  void set_metadata(std::string m) { metadata_ = std::move(m); }

  // Backend-specific body; the common header is written by save_model().
  virtual void write_body(std::string& out) const = 0;

 protected:
  // Shared precondition check for start().
  void validate_context(std::span<const TokenId> context) const;

 private:
  std::string metadata_;
};

// Checkpoint layout (little-endian):
//   "PAGPASSM" | u32 version | u8 backend | u32 metadata length | metadata |
//   backend body | u64 FNV-1a of everything before it
// The file is written to a temporary sibling and renamed into place.
void save_model(const NextTokenModel& model, const std::filesystem::path& path);
std::string serialize_model(const NextTokenModel& model);

// Throws DataError on a bad magic, version mismatch, checksum mismatch or
// truncation. No partially-initialised model is ever returned.
std::unique_ptr<NextTokenModel> load_model(const std::filesystem::path& path);
std::unique_ptr<NextTokenModel> deserialize_model(std::string_view bytes);

inline constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace pagpass
