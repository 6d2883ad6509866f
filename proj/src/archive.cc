// Copyright 2026 The Cliniex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cliniex/archive.h"

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "cliniex/text.h"

namespace cliniex::archive {
namespace {

constexpr std::uint32_t kLocalHeader = 0x04034b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint16_t kStored = 0;
constexpr std::uint16_t kDeflated = 8;
constexpr std::uint16_t kUtf8Flag = 0x0800;
// 1980-01-01 00:00, the earliest DOS timestamp.
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;
constexpr std::uint16_t kDosTime = 0;

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t U32(std::size_t pos) const {
    Check(pos, 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<unsigned char>(bytes_[pos + i]);
    }
    return v;
  }

  std::uint16_t U16(std::size_t pos) const {
    Check(pos, 2);
    return static_cast<std::uint16_t>(
        static_cast<unsigned char>(bytes_[pos]) |
        (static_cast<unsigned char>(bytes_[pos + 1]) << 8));
  }

  std::string_view Bytes(std::size_t pos, std::size_t n) const {
    Check(pos, n);
    return bytes_.substr(pos, n);
  }

  std::size_t size() const { return bytes_.size(); }

 private:
  void Check(std::size_t pos, std::size_t n) const {
    if (pos > bytes_.size() || n > bytes_.size() - pos) {
      throw std::runtime_error("truncated zip archive");
    }
  }

  std::string_view bytes_;
};

void Put16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void Put32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t Crc32(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef *>(data.data()),
            static_cast<uInt>(data.size())));
}

std::string Deflate(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw std::runtime_error("deflateInit failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(data.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef *>(const_cast<char *>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef *>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw std::runtime_error("deflate failed");
  out.resize(zs.total_out);
  return out;
}

std::string Inflate(std::string_view data, std::size_t expected_size) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
    throw std::runtime_error("inflateInit failed");
  }
  std::string out(expected_size, '\0');
  zs.next_in = reinterpret_cast<Bytef *>(const_cast<char *>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  zs.next_out = reinterpret_cast<Bytef *>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected_size) {
    throw std::runtime_error("corrupt deflate stream in zip archive");
  }
  return out;
}

}  // namespace

bool LooksLikeZip(std::string_view bytes) {
  return bytes.size() >= 4 && bytes.substr(0, 4) == std::string_view("PK\x03\x04", 4);
}

FileTree ReadZip(std::string_view bytes) {
  Reader in(bytes);
  if (in.size() < 22) throw std::runtime_error("not a zip archive");
  // The end record sits in the last 22 + 65535 (max comment) bytes.
  std::size_t eocd = std::string_view::npos;
  const std::size_t lowest = in.size() > 22 + 65535 ? in.size() - 22 - 65535 : 0;
  for (std::size_t pos = in.size() - 22 + 1; pos-- > lowest;) {
    if (in.U32(pos) == kEndOfCentralDir) {
      eocd = pos;
      break;
    }
  }
  if (eocd == std::string_view::npos) {
    throw std::runtime_error("zip end-of-central-directory record not found");
  }
  const std::uint16_t entries = in.U16(eocd + 10);
  std::size_t pos = in.U32(eocd + 16);

  FileTree files;
  for (std::uint16_t i = 0; i < entries; ++i) {
    if (in.U32(pos) != kCentralHeader) {
      throw std::runtime_error("bad zip central directory");
    }
    const std::uint16_t flags = in.U16(pos + 8);
    const std::uint16_t method = in.U16(pos + 10);
    const std::uint32_t crc = in.U32(pos + 16);
    const std::uint32_t compressed = in.U32(pos + 20);
    const std::uint32_t size = in.U32(pos + 24);
    const std::uint16_t name_len = in.U16(pos + 28);
    const std::uint16_t extra_len = in.U16(pos + 30);
    const std::uint16_t comment_len = in.U16(pos + 32);
    const std::uint32_t local = in.U32(pos + 42);
    std::string name(in.Bytes(pos + 46, name_len));
    pos += 46 + name_len + extra_len + comment_len;

    if (flags & 0x1) throw std::runtime_error("encrypted zip entries are not supported");
    if (name.empty() || name.back() == '/') continue;
    if (in.U32(local) != kLocalHeader) {
      throw std::runtime_error("bad zip local header for " + name);
    }
    const std::size_t data_pos =
        local + 30 + in.U16(local + 26) + in.U16(local + 28);
    std::string_view data = in.Bytes(data_pos, compressed);
    std::string contents;
    if (method == kStored) {
      contents = std::string(data);
    } else if (method == kDeflated) {
      contents = Inflate(data, size);
    } else {
      throw std::runtime_error("unsupported zip compression method " +
                               std::to_string(method) + " for " + name);
    }
    if (Crc32(contents) != crc) {
      throw std::runtime_error("zip checksum mismatch for " + name);
    }
    files[name] = std::move(contents);
  }
  return files;
}

std::string WriteZip(const FileTree &files) {
  std::string out;
  std::string central;
  for (const auto &[name, contents] : files) {
    const std::string packed = Deflate(contents);
    const std::uint32_t crc = Crc32(contents);
    const auto offset = static_cast<std::uint32_t>(out.size());

    Put32(out, kLocalHeader);
    Put16(out, 20);
    Put16(out, kUtf8Flag);
    Put16(out, kDeflated);
    Put16(out, kDosTime);
    Put16(out, kDosDate);
    Put32(out, crc);
    Put32(out, static_cast<std::uint32_t>(packed.size()));
    Put32(out, static_cast<std::uint32_t>(contents.size()));
    Put16(out, static_cast<std::uint16_t>(name.size()));
    Put16(out, 0);
    out += name;
    out += packed;

    Put32(central, kCentralHeader);
    Put16(central, 20);
    Put16(central, 20);
    Put16(central, kUtf8Flag);
    Put16(central, kDeflated);
    Put16(central, kDosTime);
    Put16(central, kDosDate);
    Put32(central, crc);
    Put32(central, static_cast<std::uint32_t>(packed.size()));
    Put32(central, static_cast<std::uint32_t>(contents.size()));
    Put16(central, static_cast<std::uint16_t>(name.size()));
    Put16(central, 0);
    Put16(central, 0);
    Put16(central, 0);
    Put16(central, 0);
    Put32(central, 0);
    Put32(central, offset);
    central += name;
  }
  const auto central_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  Put32(out, kEndOfCentralDir);
  Put16(out, 0);
  Put16(out, 0);
  Put16(out, static_cast<std::uint16_t>(files.size()));
  Put16(out, static_cast<std::uint16_t>(files.size()));
  Put32(out, static_cast<std::uint32_t>(central.size()));
  Put32(out, central_offset);
  Put16(out, 0);
  return out;
}

FileTree ReadDirectory(const std::string &dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  FileTree files;
  for (const auto &entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    files[rel] = ReadFile(entry.path().string());
  }
  return files;
}

void WriteDirectory(const FileTree &files, const std::string &dir) {
  namespace fs = std::filesystem;
  for (const auto &[name, contents] : files) {
    const fs::path path = fs::path(dir) / name;
    fs::create_directories(path.parent_path());
    WriteFile(path.string(), contents);
  }
}

}  // namespace cliniex::archive
