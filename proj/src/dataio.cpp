#include "emprobe/dataio.hpp"

#include <array>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "emprobe/csv.hpp"
#include "emprobe/error.hpp"

namespace emprobe {

namespace {

constexpr std::array<std::string_view, 4> kMetadataColumns = {
    "utterance_id", "speaker_id", "dataset_id", "emotion_label"};

}  // namespace

std::size_t FeatureTable::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < feature_names.size(); ++j)
    if (feature_names[j] == name) return j;
  throw InputError(fmt::format("column '{}' not found in {} table", name, representation_id));
}

std::vector<int> FeatureTable::row_indices(std::span<const std::string> utterance_ids) const {
  std::unordered_map<std::string_view, int> index;
  index.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    index.emplace(rows[i].utterance_id, static_cast<int>(i));

  std::vector<int> out;
  out.reserve(utterance_ids.size());
  std::vector<std::string_view> missing;
  for (const auto& id : utterance_ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      missing.push_back(id);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    throw InputError(fmt::format("{} utterance(s) missing from {} table: {}", missing.size(),
                                 representation_id, fmt::join(missing, ", ")));
  }
  return out;
}

std::size_t BinaryTask::positives() const {
  std::size_t n = 0;
  for (int v : y) n += v == 1;
  return n;
}

void validate_table(const FeatureTable& table) {
  if (table.values.rows() != static_cast<Eigen::Index>(table.rows.size()) ||
      table.values.cols() != static_cast<Eigen::Index>(table.feature_names.size())) {
    throw InputError(fmt::format("{} table: value matrix is {}x{}, expected {}x{}",
                                 table.representation_id, table.values.rows(),
                                 table.values.cols(), table.rows.size(),
                                 table.feature_names.size()));
  }
  std::unordered_set<std::string_view> names;
  for (const auto& name : table.feature_names) {
    if (name.empty()) throw InputError(fmt::format("{} table: empty feature name", table.representation_id));
    if (!names.insert(name).second)
      throw InputError(fmt::format("{} table: duplicate feature name '{}'", table.representation_id, name));
  }
  std::unordered_set<std::string_view> ids;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.utterance_id.empty())
      throw InputError(fmt::format("{} table: row {} has an empty utterance_id", table.representation_id, i + 1));
    if (!ids.insert(r.utterance_id).second)
      throw InputError(fmt::format("{} table: duplicate utterance_id '{}'", table.representation_id, r.utterance_id));
    if (r.speaker_id.empty())
      throw InputError(fmt::format("{} table: row {} has an empty speaker_id", table.representation_id, i + 1));
    if (r.emotion_label.empty())
      throw InputError(fmt::format("{} table: row {} has an empty emotion_label", table.representation_id, i + 1));
    for (std::size_t j = 0; j < table.feature_names.size(); ++j) {
      if (!std::isfinite(table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))))
        throw InputError(fmt::format("{} table: non-finite value at row {}, column '{}'",
                                     table.representation_id, i + 1, table.feature_names[j]));
    }
  }
}

FeatureTable load_feature_table(const std::filesystem::path& path, std::string representation_id) {
  const auto records = csv::read_file(path);
  if (records.empty()) throw InputError(fmt::format("'{}': empty file", path.string()));

  const auto& header = records.front();
  for (std::size_t j = 0; j < kMetadataColumns.size(); ++j) {
    if (j >= header.size() || header[j] != kMetadataColumns[j]) {
      throw InputError(fmt::format("'{}': column {} must be '{}' (required metadata columns: {})",
                                   path.string(), j + 1, kMetadataColumns[j],
                                   fmt::join(kMetadataColumns, ",")));
    }
  }

  FeatureTable table;
  table.representation_id = std::move(representation_id);
  table.feature_names.assign(header.begin() + kMetadataColumns.size(), header.end());
  const std::size_t d = table.feature_names.size();
  const std::size_t n = records.size() - 1;
  table.rows.reserve(n);
  table.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = records[i + 1];
    const std::size_t row_no = i + 1;
    if (rec.size() != header.size()) {
      throw InputError(fmt::format("'{}': row {} has {} fields, header has {}", path.string(),
                                   row_no, rec.size(), header.size()));
    }
    UtteranceRecord r{rec[0], rec[1], rec[2], rec[3]};
    if (auto [it, fresh] = seen.emplace(r.utterance_id, row_no); !fresh) {
      throw InputError(fmt::format("'{}': duplicate utterance_id '{}' (rows {} and {})",
                                   path.string(), r.utterance_id, it->second, row_no));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      const auto& text = rec[kMetadataColumns.size() + j];
      if (!csv::parse_double(text, v) || !std::isfinite(v)) {
        throw InputError(fmt::format("'{}': row {}, column '{}': value '{}' is not a finite number",
                                     path.string(), row_no, table.feature_names[j], text));
      }
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
    table.rows.push_back(std::move(r));
  }
  validate_table(table);
  return table;
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << fmt::format("{}", fmt::join(kMetadataColumns, ","));
  for (const auto& name : table.feature_names) out << ',' << csv::escape(name);
  out << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << csv::escape(r.utterance_id) << ',' << csv::escape(r.speaker_id) << ','
        << csv::escape(r.dataset_id) << ',' << csv::escape(r.emotion_label);
    for (Eigen::Index j = 0; j < table.values.cols(); ++j)
      out << ',' << csv::format_double(table.values(static_cast<Eigen::Index>(i), j));
    out << '\n';
  }
  if (!out) throw InputError(fmt::format("write to '{}' failed", path.string()));
}

FeatureTable speaker_normalize(const FeatureTable& table) {
  validate_table(table);
  std::map<std::string, std::vector<Eigen::Index>> by_speaker;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    by_speaker[table.rows[i].speaker_id].push_back(static_cast<Eigen::Index>(i));

  FeatureTable out = table;
  for (const auto& [speaker, idx] : by_speaker) {
    const double n = static_cast<double>(idx.size());
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) {
      double mean = 0.0;
      for (auto i : idx) mean += table.values(i, j);
      mean /= n;
      double ss = 0.0;
      for (auto i : idx) {
        const double c = table.values(i, j) - mean;
        ss += c * c;
      }
      const double sd = std::sqrt(ss / n);
      for (auto i : idx) out.values(i, j) = sd > 0.0 ? (table.values(i, j) - mean) / sd : 0.0;
    }
  }
  return out;
}

BinaryTask make_binary_task(const FeatureTable& table, std::string_view emotion,
                            std::string_view neutral_label,
                            const std::optional<std::vector<std::string>>& columns) {
  if (emotion == neutral_label)
    throw InputError(fmt::format("emotion '{}' equals the neutral label", emotion));

  std::vector<Eigen::Index> cols;
  std::vector<std::string> names;
  if (columns) {
    for (const auto& c : *columns) cols.push_back(static_cast<Eigen::Index>(table.column_index(c)));
    names = *columns;
  } else {
    cols.resize(table.dim());
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = static_cast<Eigen::Index>(j);
    names = table.feature_names;
  }

  BinaryTask task;
  task.emotion = std::string(emotion);
  task.column_names = std::move(names);
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    int label = -1;
    if (r.emotion_label == emotion) label = 1;
    else if (r.emotion_label == neutral_label) label = 0;
    if (label < 0) continue;
    keep.push_back(static_cast<Eigen::Index>(i));
    task.y.push_back(label);
    task.groups.push_back(r.speaker_id);
    task.utterance_ids.push_back(r.utterance_id);
  }
  const std::size_t pos = task.positives();
  if (pos == 0)
    throw InputError(fmt::format("emotion label '{}' not present in {} table", emotion, table.representation_id));
  if (pos == task.y.size())
    throw InputError(fmt::format("neutral label '{}' not present in {} table", neutral_label, table.representation_id));

  task.X = table.values(keep, cols);
  return task;
}

}  // namespace emprobe
