#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gram::cli {

struct EmbeddingRecord {
  std::string id;
  std::string modality;
  Eigen::VectorXd vec;
};

// Contents of one or more embedding files, grouped by modality in order of
// first appearance. Within a modality, records keep file order.
struct EmbeddingSet {
  struct Modality {
    std::string name;
    std::vector<std::string> ids;
    std::vector<Eigen::VectorXd> vecs;
  };
  Eigen::Index dim = 0;
  std::vector<Modality> modalities;

  const Modality* find(const std::string& name) const;
};

// Reads JSON-lines embedding files: a header {"n": int, "format_version": 1}
// followed by {"id", "modality", "vec"} records. Blank lines are skipped.
// Throws CliError with exit code kParseError naming the file and line.
void read_embeddings(const std::filesystem::path& path, EmbeddingSet& into);
void read_embeddings(std::istream& in, const std::string& source, EmbeddingSet& into);
EmbeddingSet read_embeddings(const std::vector<std::filesystem::path>& paths);

// Writes with 17 significant digits so every double survives a round trip.
void write_embeddings(std::ostream& out, Eigen::Index dim, const std::vector<EmbeddingRecord>& records);

}  // namespace gram::cli
