// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include "pllab/video_io/plck.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>

#include "pllab/errors.hpp"

namespace pllab {

namespace {

constexpr std::string_view kMagic = "PLCK";

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated PLCK data reading ") + what, pos_);
    }
  }

  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_plck(const TensorMap& entries) {
  if (entries.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw ArgumentError("encode_plck: too many entries");
  }
  std::string out;
  out.append(kMagic);
  put_le<std::uint16_t>(out, kPlckVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw ArgumentError("encode_plck: name longer than 65535 bytes");
    }
    if (!valid_utf8(name)) throw ArgumentError("encode_plck: name is not valid UTF-8");
    if (t.empty() || t.rank() > 255) throw ArgumentError("encode_plck: entry '" + name + "' has invalid rank");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.append(name);
    out.push_back(static_cast<char>(t.rank()));
    for (auto e : t.shape()) put_le<std::uint64_t>(out, e);
    for (double v : t.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

TensorMap decode_plck(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(std::min<std::size_t>(4, bytes.size()), "magic") != kMagic) {
    throw FormatError("bad PLCK magic", 0);
  }
  const std::size_t version_at = r.pos();
  const auto version = r.get<std::uint16_t>("version");
  if (version != kPlckVersion) {
    throw FormatError("unsupported PLCK version " + std::to_string(version), version_at);
  }
  const auto count = r.get<std::uint32_t>("entry count");
  TensorMap out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::size_t entry_at = r.pos();
    const auto name_len = r.get<std::uint16_t>("name length");
    std::string name(r.take(name_len, "name"));
    const std::size_t rank_at = r.pos();
    const auto rank = r.get<std::uint8_t>("rank");
    if (rank == 0) throw FormatError("entry '" + name + "' has rank 0", rank_at);
    Shape shape(rank);
    std::size_t total = 1;
    for (auto& ext : shape) {
      const std::size_t ext_at = r.pos();
      const auto v = r.get<std::uint64_t>("extent");
      if (v == 0) throw FormatError("entry '" + name + "' has a zero extent", ext_at);
      // Guard the allocation against corrupt extents before trusting them.
      if (v > r.remaining() / 8 + 1 || total > (r.remaining() / 8 + 1) / v) {
        throw FormatError("entry '" + name + "' extents exceed the remaining data", ext_at);
      }
      ext = static_cast<std::size_t>(v);
      total *= ext;
    }
    r.need(total * 8, "values");
    std::vector<double> values(total);
    for (auto& v : values) v = std::bit_cast<double>(r.get<std::uint64_t>("value"));
    if (out.count(name)) throw FormatError("duplicate entry name '" + name + "'", entry_at);
    out.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last PLCK entry", r.pos());
  return out;
}

void save_tensors(const std::filesystem::path& path, const TensorMap& entries) {
  const std::string bytes = encode_plck(entries);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw Error("failed writing '" + path.string() + "'");
}

TensorMap load_tensors(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path.string() + "'", 0);
  std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_plck(bytes);
}

const Tensor& require_entry(const TensorMap& entries, const std::string& name) {
  auto it = entries.find(name);
  if (it == entries.end()) throw FormatError("missing PLCK entry '" + name + "'", 0);
  return it->second;
}

}  // namespace pllab
