#include "config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <gram/errors.hpp>

#include "errors.hpp"

namespace gram::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

template <typename T>
T parse_number(const std::string& text) {
  T value{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw std::invalid_argument("not a number: '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("not a boolean: '" + text + "'");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<double>(trim(item)));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& v) {
         c.data.seed = parse_number<std::uint64_t>(v);
         c.train.seed = c.data.seed;
       }},
      {"latent_dim", [](RunConfig& c, const std::string& v) { c.data.latent_dim = parse_number<int>(v); }},
      {"embed_dim", [](RunConfig& c, const std::string& v) { c.data.embed_dim = parse_number<int>(v); }},
      {"modalities", [](RunConfig& c, const std::string& v) { c.data.modalities = parse_number<int>(v); }},
      {"num_classes", [](RunConfig& c, const std::string& v) { c.data.num_classes = parse_number<int>(v); }},
      {"noise_sigma", [](RunConfig& c, const std::string& v) { c.data.noise_sigma = parse_number<double>(v); }},
      {"modality_noise", [](RunConfig& c, const std::string& v) { c.data.modality_noise = parse_list(v); }},
      {"class_spread", [](RunConfig& c, const std::string& v) { c.data.class_spread = parse_number<double>(v); }},
      {"shared_projection", [](RunConfig& c, const std::string& v) { c.data.shared_projection = parse_bool(v); }},
      {"samples", [](RunConfig& c, const std::string& v) { c.data.samples = parse_number<int>(v); }},
      {"batch_size", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_number<int>(v); }},
      {"epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_number<int>(v); }},
      {"learning_rate", [](RunConfig& c, const std::string& v) { c.train.learning_rate = parse_number<double>(v); }},
      {"beta1", [](RunConfig& c, const std::string& v) { c.train.beta1 = parse_number<double>(v); }},
      {"beta2", [](RunConfig& c, const std::string& v) { c.train.beta2 = parse_number<double>(v); }},
      {"epsilon", [](RunConfig& c, const std::string& v) { c.train.epsilon = parse_number<double>(v); }},
      {"weight_decay", [](RunConfig& c, const std::string& v) { c.train.weight_decay = parse_number<double>(v); }},
      {"lambda", [](RunConfig& c, const std::string& v) { c.train.lambda = parse_number<double>(v); }},
      {"tau_init", [](RunConfig& c, const std::string& v) { c.train.tau_init = parse_number<double>(v); }},
      {"hidden", [](RunConfig& c, const std::string& v) { c.train.hidden = parse_number<int>(v); }},
      {"anchor", [](RunConfig& c, const std::string& v) { c.train.anchor = parse_number<int>(v); }},
      {"holdout_fraction",
       [](RunConfig& c, const std::string& v) { c.train.holdout_fraction = parse_number<double>(v); }},
      {"objective", [](RunConfig& c, const std::string& v) {
         if (v == "gram") {
           c.train.objective = Objective::kGram;
         } else if (v == "cosine") {
           c.train.objective = Objective::kPairwiseCosine;
         } else {
           throw std::invalid_argument("objective must be 'gram' or 'cosine'");
         }
       }},
  };
  return table;
}

}  // namespace

void validate(const RunConfig& config) {
  try {
    config.data.validate();
    config.train.validate();
  } catch (const InvalidSpec& e) {
    throw CliError(kConfigError, e.what());
  }
  if (config.train.anchor >= config.data.modalities) {
    throw CliError(kConfigError, "anchor " + std::to_string(config.train.anchor) + " is not one of " +
                                     std::to_string(config.data.modalities) + " modalities");
  }
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CliError(kConfigError, where + "expected key=value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw CliError(kConfigError, where + "unknown key '" + key + "'");
    try {
      it->second(config, value);
    } catch (const std::invalid_argument& e) {
      throw CliError(kConfigError, where + key + ": " + e.what());
    }
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kConfigError, path.string() + ": cannot open config");
  return parse_config(in, path.string());
}

}  // namespace gram::cli
