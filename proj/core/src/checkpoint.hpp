#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>

#include "pagpass/error.hpp"

namespace pagpass::detail {

// Appends trivially-copyable values in host byte order (little-endian on
// every supported target).
class ByteWriter {
 public:
  explicit ByteWriter(std::string& out) : out_(out) {}

  template <class T>
    requires std::is_trivially_copyable_v<T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }

  void put_bytes(std::string_view bytes) { out_.append(bytes); }

  template <class T>
  void put_array(const T* data, std::size_t n) {
    out_.append(reinterpret_cast<const char*>(data), n * sizeof(T));
  }

 private:
  std::string& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  template <class T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  template <class T>
  void get_array(T* data, std::size_t n) {
    need(n * sizeof(T));
    std::memcpy(data, in_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
  }

  bool done() const { return pos_ == in_.size(); }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("checkpoint truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace pagpass::detail
