#include "mopx/environments.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "mopx/errors.hpp"

namespace mopx {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
  }
}

std::size_t parse_arm_id(const std::string& cell, std::size_t line_no) {
  const double v = parse_number(cell, line_no);
  if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ConfigError("line " + std::to_string(line_no) + ": arm_id must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<std::string> nonempty_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::stringstream ss{std::string(text)};
  std::string line;
  while (std::getline(ss, line)) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

// --- brevity ---------------------------------------------------------------------

double brevity_score(double length, double tau_low, double tau_high) {
  if (!(tau_low < tau_high)) throw ConfigError("brevity thresholds need tau_low < tau_high");
  if (length < 0) throw DomainError("token length must be >= 0");
  if (length <= tau_low) return 1.0;
  if (length >= tau_high) return 0.0;
  return (tau_high - length) / (tau_high - tau_low);
}

ReplayTable with_brevity_objective(ReplayTable table, const BrevityThresholds& t) {
  if (!table.has_lengths()) throw ConfigError("brevity recomputation needs a len_tokens column in the replay file");
  if (table.num_objectives() < 2) throw ConfigError("brevity recomputation needs m >= 2 objectives");
  for (std::size_t a = 0; a < table.records.size(); ++a) {
    for (std::size_t i = 0; i < table.records[a].size(); ++i) {
      table.records[a][i][1] = brevity_score(table.token_lengths[a][i], t.tau_low, t.tau_high);
    }
  }
  return table;
}

// --- replay table -------------------------------------------------------------------

std::size_t ReplayTable::num_objectives() const {
  for (const auto& arm : records) {
    if (!arm.empty()) return static_cast<std::size_t>(arm.front().size());
  }
  return 0;
}

Eigen::MatrixXd ReplayTable::record_means() const {
  const auto m = static_cast<Eigen::Index>(num_objectives());
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records.size()), m);
  for (std::size_t a = 0; a < records.size(); ++a) {
    for (const auto& r : records[a]) means.row(static_cast<Eigen::Index>(a)) += r.transpose();
    if (!records[a].empty()) means.row(static_cast<Eigen::Index>(a)) /= static_cast<double>(records[a].size());
  }
  return means;
}

void ReplayTable::validate() const {
  if (records.empty()) throw ConfigError("replay table has no arms");
  const auto m = num_objectives();
  if (m < 2) throw ConfigError("replay table needs m >= 2 objectives");
  for (std::size_t a = 0; a < records.size(); ++a) {
    if (records[a].empty()) throw ConfigError("replay arm " + std::to_string(a) + " has no records");
    for (const auto& r : records[a]) {
      if (static_cast<std::size_t>(r.size()) != m) throw ConfigError("replay records disagree on m");
      if (!r.allFinite()) throw ConfigError("replay arm " + std::to_string(a) + " has a non-finite record");
    }
  }
  if (has_lengths() && token_lengths.size() != records.size()) throw ConfigError("token length table is misaligned");
}

ReplayTable parse_replay_csv(std::string_view text) {
  const auto lines = nonempty_lines(text);
  if (lines.empty()) throw ConfigError("replay file is empty");
  const auto header = split_csv_line(lines.front());
  if (header.empty() || header[0] != "arm_id") throw ConfigError("replay header must start with arm_id");
  const bool has_len = header.size() > 1 && header[1] == "len_tokens";
  const std::size_t first_obj = has_len ? 2 : 1;
  const std::size_t m = header.size() - first_obj;
  if (m < 2) throw ConfigError("replay file needs at least two objective columns");

  ReplayTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != header.size()) {
      throw ConfigError("line " + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) + " columns");
    }
    const auto arm = parse_arm_id(cells[0], i + 1);
    if (arm >= table.records.size()) {
      table.records.resize(arm + 1);
      if (has_len) table.token_lengths.resize(arm + 1);
    }
    RewardVector r(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) r[static_cast<Eigen::Index>(j)] = parse_number(cells[first_obj + j], i + 1);
    table.records[arm].push_back(std::move(r));
    if (has_len) table.token_lengths[arm].push_back(parse_number(cells[1], i + 1));
  }
  table.validate();
  return table;
}

ReplayTable load_replay_csv(const std::filesystem::path& path) { return parse_replay_csv(read_file(path)); }

// --- instance JSON -------------------------------------------------------------------

namespace {

Eigen::MatrixXd json_matrix(const nlohmann::json& j, const char* name) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string("instance field '") + name + "' must be a non-empty 2-D array");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(std::string("instance field '") + name + "' is ragged");
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return out;
}

}  // namespace

Instance parse_instance_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance JSON: ") + e.what());
  }
  try {
    Instance inst;
    inst.sigma = j.value("sigma", 0.0);
    if (j.contains("features")) inst.features = json_matrix(j["features"], "features");
    if (j.contains("theta")) inst.theta = json_matrix(j["theta"], "theta");
    if (j.contains("means")) {
      inst.means = json_matrix(j["means"], "means");
    } else if (inst.features && inst.theta) {
      inst.means = (*inst.features) * (*inst.theta);
    } else {
      throw ConfigError("instance needs 'means' (or both 'features' and 'theta')");
    }
    if (j.contains("K") && j["K"].get<std::size_t>() != inst.num_arms()) throw ConfigError("instance K disagrees with means");
    if (j.contains("m") && j["m"].get<std::size_t>() != inst.num_objectives()) {
      throw ConfigError("instance m disagrees with means");
    }
    inst.validate();
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance JSON: ") + e.what());
  }
}

Instance load_instance_json(const std::filesystem::path& path) { return parse_instance_json(read_file(path)); }

Eigen::MatrixXd parse_arm_matrix_csv(std::string_view text) {
  auto lines = nonempty_lines(text);
  if (lines.empty()) throw ConfigError("matrix file is empty");
  // Optional header row: skipped when its first cell is not numeric.
  {
    const auto first = split_csv_line(lines.front());
    try {
      parse_number(first.at(0), 1);
    } catch (const ConfigError&) {
      lines.erase(lines.begin());
    }
  }
  if (lines.empty()) throw ConfigError("matrix file has no data rows");
  const auto width = split_csv_line(lines.front()).size();
  if (width < 2) throw ConfigError("matrix rows need arm_id plus at least one value");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(width - 1));
  std::vector<bool> seen(lines.size(), false);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto cells = split_csv_line(lines[i]);
    if (cells.size() != width) throw ConfigError("matrix row " + std::to_string(i + 1) + " has the wrong width");
    const auto arm = parse_arm_id(cells[0], i + 1);
    if (arm >= lines.size() || seen[arm]) throw ConfigError("arm ids must be a permutation of 0..K-1");
    seen[arm] = true;
    for (std::size_t c = 1; c < width; ++c) {
      out(static_cast<Eigen::Index>(arm), static_cast<Eigen::Index>(c - 1)) = parse_number(cells[c], i + 1);
    }
  }
  return out;
}

Eigen::MatrixXd load_arm_matrix_csv(const std::filesystem::path& path) { return parse_arm_matrix_csv(read_file(path)); }

// --- environments -------------------------------------------------------------------

EnvironmentKind parse_environment_kind(std::string_view name) {
  if (name == "gaussian") return EnvironmentKind::Gaussian;
  if (name == "linear") return EnvironmentKind::Linear;
  if (name == "replay") return EnvironmentKind::Replay;
  throw ConfigError("unknown environment kind '" + std::string(name) + "'");
}

ReplayMode parse_replay_mode(std::string_view name) {
  if (name == "with_replacement") return ReplayMode::WithReplacement;
  if (name == "sequential") return ReplayMode::Sequential;
  throw ConfigError("unknown replay mode '" + std::string(name) + "'");
}

GaussianEnvironment::GaussianEnvironment(Instance instance) : instance_(std::move(instance)) { instance_.validate(); }

RewardVector GaussianEnvironment::do_pull(ArmId arm, RngStream& rng) const {
  RewardVector r = instance_.means.row(static_cast<Eigen::Index>(arm)).transpose();
  for (Eigen::Index j = 0; j < r.size(); ++j) r[j] += instance_.sigma * rng.normal();
  return r;
}

LinearEnvironment::LinearEnvironment(Instance instance) : instance_(std::move(instance)) {
  instance_.validate();
  if (!instance_.features || !instance_.theta) throw ConfigError("linear environment needs features and theta");
}

RewardVector LinearEnvironment::do_pull(ArmId arm, RngStream& rng) const {
  RewardVector r = (instance_.features->row(static_cast<Eigen::Index>(arm)) * (*instance_.theta)).transpose();
  for (Eigen::Index j = 0; j < r.size(); ++j) r[j] += instance_.sigma * rng.normal();
  return r;
}

ReplayEnvironment::ReplayEnvironment(ReplayTable table, ReplayMode mode, std::optional<Eigen::MatrixXd> features)
    : table_(std::move(table)), mode_(mode), features_(std::move(features)) {
  table_.validate();
  if (features_ && static_cast<std::size_t>(features_->rows()) != table_.num_arms()) {
    throw ConfigError("replay features must have one row per arm");
  }
  means_ = table_.record_means();
  cursor_.assign(table_.num_arms(), 0);
}

RewardVector ReplayEnvironment::do_pull(ArmId arm, RngStream& rng) const {
  const auto& recs = table_.records[arm];
  if (mode_ == ReplayMode::WithReplacement) return recs[rng.below(recs.size())];
  std::lock_guard lock(cursor_mutex_);
  const auto& r = recs[cursor_[arm] % recs.size()];
  ++cursor_[arm];
  return r;
}

std::unique_ptr<Environment> make_environment(EnvironmentKind kind, EnvironmentSource source, ReplayMode mode,
                                              std::optional<Eigen::MatrixXd> replay_features) {
  switch (kind) {
    case EnvironmentKind::Gaussian:
      if (!std::holds_alternative<Instance>(source)) throw ConfigError("gaussian environment needs an instance");
      return std::make_unique<GaussianEnvironment>(std::get<Instance>(std::move(source)));
    case EnvironmentKind::Linear:
      if (!std::holds_alternative<Instance>(source)) throw ConfigError("linear environment needs an instance");
      return std::make_unique<LinearEnvironment>(std::get<Instance>(std::move(source)));
    case EnvironmentKind::Replay:
      if (!std::holds_alternative<ReplayTable>(source)) throw ConfigError("replay environment needs a replay table");
      return std::make_unique<ReplayEnvironment>(std::get<ReplayTable>(std::move(source)), mode,
                                                 std::move(replay_features));
  }
  throw ConfigError("unknown environment kind");
}

Instance prefix_instance(const Instance& instance, std::size_t k) {
  if (k == 0 || k > instance.num_arms()) throw ConfigError("arm subset size out of range");
  Instance out = instance;
  const auto kk = static_cast<Eigen::Index>(k);
  out.means = instance.means.topRows(kk);
  if (instance.features) out.features = instance.features->topRows(kk);
  return out;
}

ReplayTable prefix_replay(const ReplayTable& table, std::size_t k) {
  if (k == 0 || k > table.num_arms()) throw ConfigError("arm subset size out of range");
  ReplayTable out;
  out.records.assign(table.records.begin(), table.records.begin() + static_cast<std::ptrdiff_t>(k));
  if (table.has_lengths()) {
    out.token_lengths.assign(table.token_lengths.begin(), table.token_lengths.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

}  // namespace mopx
