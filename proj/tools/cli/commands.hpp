#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <gram/train.hpp>

#include "embedding_io.hpp"

namespace gram::cli {

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  bool normalize = true;
  std::optional<std::filesystem::path> out;
};

// Every command writes data to `out` (or to --out, atomically) and throws
// CliError on failure; main() maps that onto the exit code.
void cmd_volume(const std::vector<std::filesystem::path>& paths, const std::vector<std::string>& ids,
                const GlobalOptions& options, std::ostream& out);
void cmd_simmat(const std::vector<std::filesystem::path>& paths, const std::string& anchor,
                const GlobalOptions& options, std::ostream& out);
void cmd_train(const std::filesystem::path& config_path, const GlobalOptions& options, std::ostream& out);
void cmd_eval(const std::vector<std::filesystem::path>& paths, const std::string& anchor,
              const std::vector<int>& ks, const GlobalOptions& options, std::ostream& out);
void cmd_metric(const std::vector<std::filesystem::path>& paths, const GlobalOptions& options, std::ostream& out);

// Tuples aligned by id: the anchor modality plus every other modality in
// order of first appearance. Rows follow the first data modality's order.
struct AlignedTuples {
  std::vector<std::string> ids;
  std::string anchor;
  std::vector<std::string> modalities;  // anchor first
  std::vector<Eigen::MatrixXd> rows;    // one B x n matrix per modality, anchor first
};
AlignedTuples align(const EmbeddingSet& set, const std::string& anchor, bool normalize);

// B x B volumes: entry (i, j) pairs the anchor of id j with the data of id i.
Eigen::MatrixXd cross_volumes(const AlignedTuples& tuples);

// Parses a simmat CSV back into ids and values.
struct SimilarityCsv {
  std::vector<std::string> row_ids;
  std::vector<std::string> column_ids;
  Eigen::MatrixXd values;
};
SimilarityCsv read_simmat_csv(std::istream& in);

// Writes through a sibling temporary file renamed into place.
void write_atomically(const std::filesystem::path& path, const std::string& contents);

// Checkpoint layout: `<stem>.bin` holds every parameter as row-major
// little-endian float64, `<stem>.json` names each tensor with its shape and
// element offset.
void write_checkpoint(const std::filesystem::path& stem, const MultimodalModel& model);

}  // namespace gram::cli
