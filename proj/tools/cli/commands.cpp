#include "commands.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include <gram/errors.hpp>
#include <gram/linalg.hpp>
#include <gram/metrics.hpp>
#include <gram/similarity.hpp>
#include <gram/synth.hpp>

#include "config_file.hpp"
#include "errors.hpp"

namespace gram::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string format_g(double x, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

// Sends command output to --out when given, otherwise to `out`.
void emit(const GlobalOptions& options, const std::string& text, std::ostream& out) {
  if (options.out) {
    write_atomically(*options.out, text);
  } else {
    out << text;
  }
}

MultimodalBatch to_batch(const AlignedTuples& tuples) {
  std::vector<ModalityBatch> datas;
  for (std::size_t m = 1; m < tuples.rows.size(); ++m) datas.emplace_back(tuples.modalities[m], tuples.rows[m]);
  return MultimodalBatch(ModalityBatch(tuples.modalities[0], tuples.rows[0]), std::move(datas));
}

std::vector<Vector> tuple_of(const AlignedTuples& tuples, Eigen::Index data_row, Eigen::Index anchor_row) {
  std::vector<Vector> out{tuples.rows[0].row(anchor_row).transpose()};
  for (std::size_t m = 1; m < tuples.rows.size(); ++m) out.push_back(tuples.rows[m].row(data_row).transpose());
  return out;
}

AlignedTuples align_ids(const EmbeddingSet& set, const std::string& anchor, bool normalize,
                        const std::vector<std::string>* only) {
  if (set.modalities.size() < 2) {
    throw CliError(kUsage, "need at least two modalities, found " + std::to_string(set.modalities.size()));
  }
  AlignedTuples out;
  const auto* anchor_mod = anchor.empty() ? &set.modalities.front() : set.find(anchor);
  if (anchor_mod == nullptr) {
    std::string known;
    for (const auto& m : set.modalities) known += (known.empty() ? "" : ", ") + m.name;
    throw CliError(kUnknownAnchor, "unknown anchor modality '" + anchor + "' (have: " + known + ")");
  }
  std::vector<const EmbeddingSet::Modality*> order{anchor_mod};
  for (const auto& m : set.modalities)
    if (&m != anchor_mod) order.push_back(&m);

  out.anchor = anchor_mod->name;
  out.ids = only != nullptr ? *only : order[1]->ids;
  for (const auto* m : order) {
    out.modalities.push_back(m->name);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m->ids.size(); ++i) index.emplace(m->ids[i], i);
    if (only == nullptr && index.size() != out.ids.size()) {
      // Every modality must carry exactly the same ids.
      for (const auto& id : m->ids)
        if (std::find(out.ids.begin(), out.ids.end(), id) == out.ids.end()) {
          throw CliError(kMissingId, "id '" + id + "' of modality '" + m->name + "' is missing from modality '" +
                                         order[1]->name + "'");
        }
    }
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(out.ids.size()), set.dim);
    for (std::size_t r = 0; r < out.ids.size(); ++r) {
      const auto it = index.find(out.ids[r]);
      if (it == index.end()) {
        throw CliError(kMissingId, "id '" + out.ids[r] + "' is missing from modality '" + m->name + "'");
      }
      Vector v = m->vecs[it->second];
      if (normalize) {
        try {
          v = gram::normalize(v);
        } catch (const ZeroVector&) {
          throw CliError(kParseError, "zero vector for id '" + out.ids[r] + "' in modality '" + m->name + "'");
        }
      }
      rows.row(static_cast<Eigen::Index>(r)) = v.transpose();
    }
    out.rows.push_back(std::move(rows));
  }
  if (out.ids.empty()) throw CliError(kUsage, "no tuples to process");
  return out;
}

}  // namespace

AlignedTuples align(const EmbeddingSet& set, const std::string& anchor, bool normalize) {
  return align_ids(set, anchor, normalize, nullptr);
}

Eigen::MatrixXd cross_volumes(const AlignedTuples& tuples) {
  const auto b = static_cast<Eigen::Index>(tuples.ids.size());
  bool unit = true;
  for (const auto& rows : tuples.rows)
    unit = unit && ((rows.rowwise().norm().array() - 1.0).abs() <= 1e-10).all();
  if (unit) {
    const auto threads = std::max(1u, std::thread::hardware_concurrency());
    return cross_volume_matrix(to_batch(tuples), threads).values;
  }
  Eigen::MatrixXd values(b, b);
  for (Eigen::Index i = 0; i < b; ++i)
    for (Eigen::Index j = 0; j < b; ++j) values(i, j) = gramian_volume(tuple_of(tuples, i, j)).value;
  return values;
}

void write_atomically(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    f.flush();
    if (!f) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw CliError(kUsage, "cannot write " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw CliError(kUsage, "cannot move output into place at " + path.string());
  }
}

void cmd_volume(const std::vector<std::filesystem::path>& paths, const std::vector<std::string>& ids,
                const GlobalOptions& options, std::ostream& out) {
  const auto set = read_embeddings(paths);
  const auto tuples = align_ids(set, "", options.normalize, ids.empty() ? nullptr : &ids);
  std::ostringstream text;
  text << "id,k,volume\n";
  for (std::size_t i = 0; i < tuples.ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double vol = gramian_volume(tuple_of(tuples, row, row)).value;
    text << csv_field(tuples.ids[i]) << ',' << tuples.rows.size() << ',' << format_g(vol, 12) << '\n';
  }
  emit(options, text.str(), out);
}

void cmd_simmat(const std::vector<std::filesystem::path>& paths, const std::string& anchor,
                const GlobalOptions& options, std::ostream& out) {
  const auto set = read_embeddings(paths);
  const auto tuples = align(set, anchor, options.normalize);
  const auto values = cross_volumes(tuples);
  std::ostringstream text;
  text << "id";
  for (const auto& id : tuples.ids) text << ',' << csv_field(id);
  text << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    text << csv_field(tuples.ids[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < values.cols(); ++j) text << ',' << format_g(values(i, j), 12);
    text << '\n';
  }
  emit(options, text.str(), out);
}

SimilarityCsv read_simmat_csv(std::istream& in) {
  SimilarityCsv csv;
  std::string line;
  if (!std::getline(in, line)) throw CliError(kParseError, "simmat:1: empty file");
  auto header = split_csv_line(line);
  csv.column_ids.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw CliError(kParseError, "simmat:" + std::to_string(line_no) + ": wrong field count");
    }
    csv.row_ids.push_back(fields[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c) row.push_back(std::stod(fields[c]));
    rows.push_back(std::move(row));
  }
  csv.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(csv.column_ids.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      csv.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return csv;
}

void cmd_eval(const std::vector<std::filesystem::path>& paths, const std::string& anchor,
              const std::vector<int>& ks, const GlobalOptions& options, std::ostream& out) {
  for (int k : ks)
    if (k < 1) throw CliError(kUsage, "recall cutoffs must be positive");
  const auto set = read_embeddings(paths);
  const auto tuples = align(set, anchor, options.normalize);
  const auto values = cross_volumes(tuples);

  ordered_json report;
  report["anchor"] = tuples.anchor;
  report["modalities"] = tuples.modalities;
  report["B"] = tuples.ids.size();
  report["ks"] = ks;
  for (auto [key, direction] : {std::pair{"data_to_anchor", RetrievalDirection::kDataToAnchor},
                                std::pair{"anchor_to_data", RetrievalDirection::kAnchorToData}}) {
    const auto r = retrieval_recall(values, ks, Polarity::kSmallerIsCloser, direction);
    ordered_json recalls;
    for (std::size_t i = 0; i < ks.size(); ++i) recalls["R@" + std::to_string(ks[i])] = r.recalls[i];
    report[key] = recalls;
  }
  emit(options, report.dump(2) + "\n", out);
}

void cmd_metric(const std::vector<std::filesystem::path>& paths, const GlobalOptions& options, std::ostream& out) {
  const auto set = read_embeddings(paths);
  const auto tuples = align(set, "", options.normalize);
  double sum = 0.0;
  for (std::size_t i = 0; i < tuples.ids.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    sum += gramian_volume(tuple_of(tuples, row, row)).value;
  }
  const double mean = sum / static_cast<double>(tuples.ids.size());
  ordered_json report;
  report["modalities"] = tuples.modalities;
  report["B"] = tuples.ids.size();
  report["mean_matched_volume"] = mean;
  report["one_minus_gram"] = 1.0 - mean;
  emit(options, report.dump(2) + "\n", out);
}

void write_checkpoint(const std::filesystem::path& stem, const MultimodalModel& model) {
  std::string bytes;
  ordered_json tensors = ordered_json::array();
  std::size_t offset = 0;
  for (const auto* p : model.parameters()) {
    const auto& v = p->value;
    for (Eigen::Index r = 0; r < v.rows(); ++r)
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        auto word = std::bit_cast<std::uint64_t>(v(r, c));
        for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((word >> (8 * b)) & 0xff));
      }
    tensors.push_back({{"name", p->name}, {"shape", {v.rows(), v.cols()}}, {"offset", offset}});
    offset += static_cast<std::size_t>(v.size());
  }
  auto bin = stem;
  bin += ".bin";
  auto sidecar = stem;
  sidecar += ".json";
  ordered_json meta;
  meta["format_version"] = 1;
  meta["data"] = bin.filename().string();
  meta["dtype"] = "float64";
  meta["byte_order"] = "little";
  meta["layout"] = "row-major";
  meta["values"] = offset;
  meta["tensors"] = tensors;
  write_atomically(bin, bytes);
  write_atomically(sidecar, meta.dump(2) + "\n");
}

void cmd_train(const std::filesystem::path& config_path, const GlobalOptions& options, std::ostream& out) {
  auto config = load_config(config_path);
  if (options.seed) {
    config.data.seed = *options.seed;
    config.train.seed = *options.seed;
  }
  validate(config);

  const auto dir = options.out.value_or(".");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CliError(kUsage, "cannot create output directory " + dir.string());
  const auto trace_path = dir / "trace.csv";
  const auto write_trace = [&](const TrainingTrace& trace) {
    std::ostringstream csv;
    trace.write_csv(csv);
    write_atomically(trace_path, csv.str());
  };

  const auto data = generate_dataset(config.data);
  TrainResult result;
  try {
    result = train(config.train, data, make_model(config.train, data, config.data.embed_dim));
  } catch (const TrainingDiverged& e) {
    write_trace(e.trace());
    throw CliError(kDiverged, std::string("training diverged: ") + e.what());
  } catch (const InvalidSpec& e) {
    throw CliError(kConfigError, e.what());
  }
  write_trace(result.trace);
  write_checkpoint(dir / "checkpoint", result.model);

  const auto& first = result.trace.rows.front();
  const auto& last = result.trace.rows.back();
  ordered_json summary;
  summary["trace"] = trace_path.string();
  summary["checkpoint"] = (dir / "checkpoint.bin").string();
  summary["parameters"] = result.model.parameter_count();
  summary["epochs"] = last.epoch;
  summary["initial"] = {{"matched_vol", first.matched_vol}, {"mismatched_vol", first.mismatched_vol},
                        {"r_at_1", first.r_at_1}};
  summary["final"] = {{"matched_vol", last.matched_vol}, {"mismatched_vol", last.mismatched_vol},
                      {"r_at_1", last.r_at_1}};
  out << summary.dump(2) << '\n';
}

}  // namespace gram::cli
