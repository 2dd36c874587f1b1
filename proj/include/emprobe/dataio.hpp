#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace emprobe {

inline constexpr std::string_view kDefaultNeutralLabel = "neutral";

// Metadata for one utterance. The numeric values live in the owning table's
// matrix, one row per record.
struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string dataset_id;
  std::string emotion_label;
};

// One representation (embedding or acoustic) of a set of utterances.
// Invariants: values is rows.size() x feature_names.size() and finite,
// utterance ids are unique, feature names are unique and non-empty.
struct FeatureTable {
  std::string representation_id;
  std::vector<std::string> feature_names;
  std::vector<UtteranceRecord> rows;
  Eigen::MatrixXd values;

  std::size_t size() const { return rows.size(); }
  std::size_t dim() const { return feature_names.size(); }

  // Index of the named feature column; throws InputError if absent.
  std::size_t column_index(std::string_view name) const;
  // Row index per utterance id; throws InputError naming missing ids.
  std::vector<int> row_indices(std::span<const std::string> utterance_ids) const;
};

// Emotion-vs-neutral classification problem. y is 1 for `emotion`.
struct BinaryTask {
  std::string emotion;
  Eigen::MatrixXd X;
  std::vector<int> y;
  std::vector<std::string> groups;
  std::vector<std::string> column_names;
  std::vector<std::string> utterance_ids;

  std::size_t size() const { return y.size(); }
  std::size_t positives() const;
};

// Checks every FeatureTable invariant; throws InputError on the first breach.
void validate_table(const FeatureTable& table);

FeatureTable load_feature_table(const std::filesystem::path& path,
                                std::string representation_id);

// Writes the canonical CSV; values use 17 significant digits so a reload is
// bit-identical.
void write_feature_table(const FeatureTable& table, const std::filesystem::path& path);

// Per-speaker z-score with population standard deviation. Columns that are
// constant within a speaker become 0 for that speaker.
FeatureTable speaker_normalize(const FeatureTable& table);

BinaryTask make_binary_task(const FeatureTable& table, std::string_view emotion,
                            std::string_view neutral_label = kDefaultNeutralLabel,
                            const std::optional<std::vector<std::string>>& columns = std::nullopt);

}  // namespace emprobe
