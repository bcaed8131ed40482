#include "embedding_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace gram::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& message) {
  throw CliError(kParseError, source + ":" + std::to_string(line) + ": " + message);
}

std::string format17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

const EmbeddingSet::Modality* EmbeddingSet::find(const std::string& name) const {
  for (const auto& m : modalities)
    if (m.name == name) return &m;
  return nullptr;
}

void read_embeddings(std::istream& in, const std::string& source, EmbeddingSet& into) {
  std::string text;
  std::size_t line_no = 0;
  bool have_header = false;
  Eigen::Index dim = 0;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& m : into.modalities)
    for (const auto& id : m.ids) seen.emplace(m.name, id);

  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) fail(source, line_no, "expected a JSON object");

    if (!have_header) {
      if (!record.contains("format_version") || !record.contains("n")) {
        fail(source, line_no, "first record must be the header {n, format_version}");
      }
      if (record["format_version"] != 1) fail(source, line_no, "unsupported format_version");
      if (!record["n"].is_number_integer() || record["n"].get<long long>() < 1) {
        fail(source, line_no, "header n must be a positive integer");
      }
      dim = record["n"].get<Eigen::Index>();
      if (into.dim != 0 && into.dim != dim) {
        fail(source, line_no, "dimension " + std::to_string(dim) + " differs from earlier files (" +
                                  std::to_string(into.dim) + ")");
      }
      into.dim = dim;
      have_header = true;
      continue;
    }

    const auto id = record.find("id");
    const auto modality = record.find("modality");
    const auto vec = record.find("vec");
    if (id == record.end() || !id->is_string()) fail(source, line_no, "record needs a string id");
    if (modality == record.end() || !modality->is_string()) fail(source, line_no, "record needs a string modality");
    if (vec == record.end() || !vec->is_array()) fail(source, line_no, "record needs a vec array");
    if (static_cast<Eigen::Index>(vec->size()) != dim) {
      fail(source, line_no, "vec has " + std::to_string(vec->size()) + " entries, header says " + std::to_string(dim));
    }
    Eigen::VectorXd v(dim);
    for (Eigen::Index c = 0; c < dim; ++c) {
      const auto& x = (*vec)[static_cast<std::size_t>(c)];
      if (!x.is_number()) fail(source, line_no, "vec entries must be numbers");
      v(c) = x.get<double>();
      if (!std::isfinite(v(c))) fail(source, line_no, "vec entries must be finite");
    }

    auto key = std::make_pair(modality->get<std::string>(), id->get<std::string>());
    if (!seen.insert(key).second) fail(source, line_no, "duplicate (id, modality) " + key.second + "/" + key.first);

    EmbeddingSet::Modality* target = nullptr;
    for (auto& m : into.modalities)
      if (m.name == key.first) target = &m;
    if (target == nullptr) {
      into.modalities.push_back({key.first, {}, {}});
      target = &into.modalities.back();
    }
    target->ids.push_back(std::move(key.second));
    target->vecs.push_back(std::move(v));
  }
  if (!have_header) fail(source, line_no, "missing header");
}

void read_embeddings(const std::filesystem::path& path, EmbeddingSet& into) {
  std::ifstream in(path);
  if (!in) throw CliError(kParseError, path.string() + ":0: cannot open file");
  read_embeddings(in, path.string(), into);
}

EmbeddingSet read_embeddings(const std::vector<std::filesystem::path>& paths) {
  EmbeddingSet set;
  for (const auto& p : paths) read_embeddings(p, set);
  return set;
}

void write_embeddings(std::ostream& out, Eigen::Index dim, const std::vector<EmbeddingRecord>& records) {
  out << json{{"n", dim}, {"format_version", 1}}.dump() << '\n';
  for (const auto& r : records) {
    out << "{\"id\":" << json(r.id).dump() << ",\"modality\":" << json(r.modality).dump() << ",\"vec\":[";
    for (Eigen::Index c = 0; c < r.vec.size(); ++c) out << (c ? "," : "") << format17(r.vec(c));
    out << "]}\n";
  }
}

}  // namespace gram::cli
