// Copyright 2026 The ssnet Authors
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

#ifndef SSNET_ARCHIVE_HPP_
#define SSNET_ARCHIVE_HPP_

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssnet/tensor.hpp"

namespace ssnet {

// Single-file container for named float32 arrays plus a JSON header.
// Layout: 8-byte magic, u64 header length, header JSON, raw payload.
// Writing the same content always produces the same bytes.
class Archive {
 public:
  static constexpr char kMagic[9] = "SSNA0001";

  std::string kind;            // "checkpoint" | "weights"
  nlohmann::ordered_json meta; // free-form (config snapshot, epoch, ...)

  void put(const std::string& name, Tensor t) { tensors_.emplace_back(name, std::move(t)); }

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : tensors_)
      if (n == name) return &t;
    return nullptr;
  }

  const Tensor& get(const std::string& name) const {
    const Tensor* t = find(name);
    check_run(t != nullptr, cat("archive: missing tensor '", name, "'"));
    return *t;
  }

  const std::vector<std::pair<std::string, Tensor>>& tensors() const { return tensors_; }

  void save(const std::filesystem::path& path) const {
    nlohmann::ordered_json header;
    header["kind"] = kind;
    header["format"] = "ssnet.archive.v1";
    header["meta"] = meta.is_null() ? nlohmann::ordered_json::object() : meta;
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    u64 offset = 0;
    for (const auto& [name, t] : tensors_) {
      nlohmann::ordered_json e;
      e["name"] = name;
      e["shape"] = t.shape();
      e["dtype"] = "f32";
      e["offset"] = offset;
      offset += static_cast<u64>(t.numel()) * sizeof(float);
      index.push_back(e);
    }
    header["tensors"] = index;
    std::string hs = header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    check_run(os.good(), cat("archive: cannot write ", path.string()));
    os.write(kMagic, 8);
    u64 hlen = hs.size();
    os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : tensors_) {
      os.write(reinterpret_cast<const char*>(t.data()),
               static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
    check_run(os.good(), cat("archive: write failed for ", path.string()));
  }

  static Archive load(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    check_run(is.good(), cat("archive: cannot open ", path.string()));
    char magic[8];
    is.read(magic, 8);
    check_run(is.good() && std::memcmp(magic, kMagic, 8) == 0,
              cat("archive: bad magic in ", path.string()));
    u64 hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    check_run(is.good() && hlen > 0 && hlen < (1ull << 30), "archive: bad header length");
    std::string hs(hlen, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(hlen));
    check_run(is.good(), "archive: truncated header");

    nlohmann::ordered_json header = nlohmann::ordered_json::parse(hs);
    Archive a;
    a.kind = header.at("kind").get<std::string>();
    a.meta = header.value("meta", nlohmann::ordered_json::object());
    for (const auto& e : header.at("tensors")) {
      std::vector<i64> shape = e.at("shape").get<std::vector<i64>>();
      Tensor t(shape);
      is.read(reinterpret_cast<char*>(t.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
      check_run(is.good(), cat("archive: truncated payload in ", path.string()));
      a.tensors_.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }
    return a;
  }

 private:
  std::vector<std::pair<std::string, Tensor>> tensors_;
};

}  // namespace ssnet

#endif  // SSNET_ARCHIVE_HPP_
