#pragma once

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "lorentz/data.hpp"
#include "lorentz/error.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/optimizer.hpp"

// Embedding checkpoint format: a header line
//   # model=<lorentz|poincare> dim=<n>
// followed by one `id<TAB>c0<TAB>c1...` row per concept. Coordinates are
// written with 17 significant digits so doubles round-trip exactly.

namespace lorentz {

enum class ModelKind { lorentz, poincare };

inline const char* model_name(ModelKind m) {
  return m == ModelKind::lorentz ? "lorentz" : "poincare";
}

struct EmbeddingFile {
  ModelKind model = ModelKind::lorentz;
  int dim = 0;  // manifold dimension n; lorentz rows carry n+1 coordinates
  std::vector<std::string> ids;
  std::vector<Vec> rows;

  size_t coords_per_row() const { return model == ModelKind::lorentz ? dim + 1 : dim; }

  // Requires lorentz rows; manifold validity is checked separately.
  EmbeddingTable to_table() const {
    if (model != ModelKind::lorentz)
      throw DataError("embedding file is not in the lorentz model");
    EmbeddingTable table(ids, dim);
    for (size_t i = 0; i < rows.size(); ++i) {
      auto r = table.row(i);
      std::copy(rows[i].begin(), rows[i].end(), r.begin());
    }
    return table;
  }

  static EmbeddingFile from_table(const EmbeddingTable& table) {
    EmbeddingFile f;
    f.model = ModelKind::lorentz;
    f.dim = table.dim();
    f.ids = table.ids();
    f.rows.reserve(table.size());
    for (size_t i = 0; i < table.size(); ++i) {
      auto r = table.row(i);
      f.rows.emplace_back(r.begin(), r.end());
    }
    return f;
  }
};

// All output files are written to a temp path and renamed into place, so a
// failure never leaves a partial file behind.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw DataError("write failed: " + tmp);
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw DataError("cannot rename " + tmp + " to " + path);
  }
}

inline std::string format_embedding(const EmbeddingFile& f) {
  std::string out = "# model=";
  out += model_name(f.model);
  out += " dim=" + std::to_string(f.dim) + "\n";
  char buf[64];
  for (size_t i = 0; i < f.ids.size(); ++i) {
    out += f.ids[i];
    for (double c : f.rows[i]) {
      std::snprintf(buf, sizeof buf, "\t%.17g", c);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline void save_embedding(const std::string& path, const EmbeddingFile& f) {
  write_file_atomic(path, format_embedding(f));
}

inline void save_embedding(const std::string& path, const EmbeddingTable& table) {
  save_embedding(path, EmbeddingFile::from_table(table));
}

inline EmbeddingFile load_embedding(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  EmbeddingFile f;
  int dim = 0;
  char model_buf[16] = {0};
  if (std::sscanf(line.c_str(), "# model=%15s dim=%d", model_buf, &dim) != 2)
    throw DataError(path + ":1: expected header '# model=<lorentz|poincare> dim=<n>'");
  const std::string model(model_buf);
  if (model == "lorentz") f.model = ModelKind::lorentz;
  else if (model == "poincare") f.model = ModelKind::poincare;
  else throw DataError(path + ":1: unknown model '" + model + "'");
  if (dim < 2) throw DataError(path + ":1: dim must be >= 2");
  f.dim = dim;

  std::set<std::string> seen;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != f.coords_per_row() + 1)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(f.coords_per_row() + 1) + " fields, got " +
                      std::to_string(fields.size()));
    if (!seen.insert(fields[0]).second)
      throw DataError(path + ":" + std::to_string(lineno) + ": duplicate id '" + fields[0] + "'");
    Vec row(f.coords_per_row());
    for (size_t c = 0; c < row.size(); ++c) {
      row[c] = detail::parse_number(fields[c + 1], path, lineno);
      if (!std::isfinite(row[c]))
        throw DataError(path + ":" + std::to_string(lineno) + ": non-finite coordinate");
    }
    f.ids.push_back(fields[0]);
    f.rows.push_back(std::move(row));
  }
  if (f.ids.empty()) throw DataError(path + ": no embedding rows");
  return f;
}

// Sidecar metadata written next to a training checkpoint.
struct CheckpointMeta {
  std::string model = "lorentz";
  int dim = 0;
  size_t concepts = 0;
  int epochs = 0;
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  double final_mean_loss = 0.0;
};

inline uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline void save_checkpoint_meta(const std::string& path, const CheckpointMeta& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "{\n"
                "  \"model\": \"%s\",\n"
                "  \"dim\": %d,\n"
                "  \"concepts\": %zu,\n"
                "  \"epochs\": %d,\n"
                "  \"seed\": %" PRIu64 ",\n"
                "  \"config_hash\": \"%016" PRIx64 "\",\n"
                "  \"final_mean_loss\": %.17g\n"
                "}\n",
                m.model.c_str(), m.dim, m.concepts, m.epochs, m.seed, m.config_hash,
                m.final_mean_loss);
  write_file_atomic(path, buf);
}

}  // namespace lorentz
