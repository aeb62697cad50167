#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "soe/error.hpp"

namespace soe {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts are not supported");

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!os) throw IoError("write failed");
}

inline void read_bytes(std::istream& is, void* p, size_t n, const char* what) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n)
    throw IoError(std::string("truncated file while reading ") + what);
}

template <typename T>
void write_le(std::ostream& os, T v) {
  write_bytes(os, &v, sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
  T v;
  read_bytes(is, &v, sizeof(T), what);
  return v;
}

inline bool at_eof(std::istream& is) {
  return is.peek() == std::char_traits<char>::eof();
}

// Write-temp-then-rename so readers never observe a partial file.
class AtomicFileWriter {
public:
  explicit AtomicFileWriter(const std::string& path)
      : path_(path), tmp_(path + ".tmp"), os_(tmp_, std::ios::binary | std::ios::trunc) {
    if (!os_) throw IoError("cannot open for writing: " + tmp_);
  }

  std::ofstream& stream() { return os_; }

  void commit() {
    os_.flush();
    if (!os_) throw IoError("write failed: " + tmp_);
    os_.close();
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw IoError("rename failed: " + tmp_ + " -> " + path_ + ": " + ec.message());
    committed_ = true;
  }

  ~AtomicFileWriter() {
    if (!committed_) {
      if (os_.is_open()) os_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  AtomicFileWriter(const AtomicFileWriter&) = delete;
  AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

private:
  std::string path_;
  std::string tmp_;
  std::ofstream os_;
  bool committed_ = false;
};

inline void atomic_write_text(const std::string& path, const std::string& text) {
  AtomicFileWriter w(path);
  w.stream() << text;
  w.commit();
}

} // namespace soe
