#include "facetset/embeddings.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "facetset/errors.hpp"

namespace facetset {

namespace {

std::string lowercase(std::string_view w) {
  std::string out(w);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_uint(std::string_view s, std::size_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  // from_chars for double is missing from some libstdc++ builds; strtod
  // needs a terminated buffer.
  std::string tmp(s);
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size() && !tmp.empty();
}

std::string read_gz(const std::filesystem::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw IoError(path.string(), "cannot open embeddings");
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw IoError(path.string(), "gzip stream is corrupt");
  return out;
}

}  // namespace

bool EmbeddingTable::add(std::string_view word, std::span<const double> vec) {
  if (dim_ == 0) dim_ = vec.size();
  if (vec.size() != dim_)
    throw DimensionError("vector for '" + std::string(word) + "' has " + std::to_string(vec.size()) +
                         " components, expected " + std::to_string(dim_));
  for (double v : vec)
    if (!std::isfinite(v)) throw FormatError("non-finite component for '" + std::string(word) + "'", 0);
  auto key = lowercase(word);
  if (lookup_.count(key)) {
    ++duplicates_;
    return false;
  }
  lookup_.emplace(key, words_.size());
  words_.push_back(std::move(key));
  data_.insert(data_.end(), vec.begin(), vec.end());
  return true;
}

std::optional<std::span<const double>> EmbeddingTable::find(std::string_view word) const {
  auto it = lookup_.find(std::string(word));
  if (it == lookup_.end()) return std::nullopt;
  return std::span<const double>(data_.data() + it->second * dim_, dim_);
}

EmbeddingTable parse_embeddings(std::string_view text, std::optional<std::size_t> expected_dim) {
  EmbeddingTable table(expected_dim.value_or(0));
  std::size_t lineno = 0;
  std::size_t pos = 0;
  std::size_t dim = expected_dim.value_or(0);
  std::vector<double> vec;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;

    if (lineno == 1 && fields.size() == 2) {
      std::size_t count = 0, hdim = 0;
      if (parse_uint(fields[0], count) && parse_uint(fields[1], hdim)) {
        if (expected_dim && hdim != *expected_dim)
          throw DimensionError("header declares dimension " + std::to_string(hdim) + ", expected " +
                               std::to_string(*expected_dim));
        dim = hdim;
        continue;
      }
    }
    if (fields.size() < 2) throw FormatError("row has no vector components", lineno);
    if (dim == 0) dim = fields.size() - 1;
    if (fields.size() - 1 != dim) {
      if (expected_dim && table.size() == 0)
        throw DimensionError("row has " + std::to_string(fields.size() - 1) + " components, expected " +
                             std::to_string(*expected_dim));
      throw FormatError("ragged row: " + std::to_string(fields.size() - 1) + " components, expected " +
                            std::to_string(dim),
                        lineno);
    }
    vec.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!parse_double(fields[k + 1], vec[k]) || !std::isfinite(vec[k]))
        throw FormatError("bad vector component '" + std::string(fields[k + 1]) + "'", lineno);
    }
    table.add(fields[0], vec);
  }
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, std::optional<std::size_t> expected_dim) {
  std::string text;
  if (path.extension() == ".gz") {
    text = read_gz(path);
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open embeddings");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  return parse_embeddings(text, expected_dim);
}

std::optional<SgEmbedding> embed_skipgram(const EmbeddingTable& table, const SkipGram& sg) {
  SgEmbedding out;
  out.vector.assign(table.dim(), 0.0);
  for (const auto* side : {&sg.left, &sg.right}) {
    for (const auto& tok : *side) {
      if (tok == kSlotMarker) continue;
      const auto v = table.find(tok);
      if (!v) continue;
      for (std::size_t k = 0; k < v->size(); ++k) out.vector[k] += (*v)[k];
      ++out.support;
    }
  }
  if (out.support == 0) return std::nullopt;
  for (auto& x : out.vector) x /= static_cast<double>(out.support);
  return out;
}

}  // namespace facetset
