#include "emprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <set>

#include "emprobe/error.hpp"
#include "emprobe/rng.hpp"

namespace emprobe {

void validate_spec(const SynthSpec& spec) {
  if (spec.n_speakers < 1) throw InputError(fmt::format("n_speakers must be >= 1, got {}", spec.n_speakers));
  if (spec.utterances_per_speaker < 1)
    throw InputError(fmt::format("utterances_per_speaker must be >= 1, got {}", spec.utterances_per_speaker));
  if (spec.embed_dim < 1) throw InputError(fmt::format("embed_dim must be >= 1, got {}", spec.embed_dim));
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma))
    throw InputError(fmt::format("noise_sigma must be finite and >= 0, got {}", spec.noise_sigma));

  std::set<int> dims;
  for (int p : spec.planted_dims) {
    if (p < 0 || p >= spec.embed_dim)
      throw InputError(fmt::format("planted dim {} is outside [0, {})", p, spec.embed_dim));
    if (!dims.insert(p).second) throw InputError(fmt::format("planted dim {} listed twice", p));
  }
  std::set<std::string> names;
  bool any_informative = false;
  for (const auto& l : spec.latents) {
    if (l.name.empty()) throw InputError("latent names must be non-empty");
    if (!names.insert(l.name).second) throw InputError(fmt::format("latent '{}' listed twice", l.name));
    if (std::find(kCategories.begin(), kCategories.end(), l.category) == kCategories.end())
      throw InputError(fmt::format("latent '{}' has unknown category '{}'", l.name, l.category));
    any_informative |= l.informative;
  }
  if (!names.contains(spec.label_latent))
    throw InputError(fmt::format("label latent '{}' is not among the latents", spec.label_latent));
  if (!spec.planted_dims.empty() && !any_informative)
    throw InputError("planted dims need at least one informative latent");
}

SynthData generate(const SynthSpec& spec) {
  validate_spec(spec);
  Rng rng(spec.seed);

  std::vector<std::size_t> informative;
  std::size_t label_index = 0;
  for (std::size_t l = 0; l < spec.latents.size(); ++l) {
    if (spec.latents[l].informative) informative.push_back(l);
    if (spec.latents[l].name == spec.label_latent) label_index = l;
  }
  Matrix mixing(static_cast<Eigen::Index>(spec.planted_dims.size()), static_cast<Eigen::Index>(informative.size()));
  for (Eigen::Index p = 0; p < mixing.rows(); ++p)
    for (Eigen::Index l = 0; l < mixing.cols(); ++l) mixing(p, l) = rng.normal();
  // unit-norm rows: every planted dim carries its latents at the same signal-to-noise ratio
  mixing.rowwise().normalize();

  const auto n = static_cast<Eigen::Index>(spec.n_speakers) * spec.utterances_per_speaker;
  const auto d = static_cast<Eigen::Index>(spec.embed_dim);
  const auto L = static_cast<Eigen::Index>(spec.latents.size());

  SynthData out;
  out.embeddings.representation_id = "embedding";
  out.acoustic.representation_id = "acoustic";
  for (Eigen::Index j = 0; j < d; ++j) out.embeddings.feature_names.push_back(fmt::format("emb.{}", j));
  std::map<std::string, std::string> categories;
  for (const auto& l : spec.latents) {
    out.acoustic.feature_names.push_back(l.name);
    categories.emplace(l.name, l.category);
  }
  out.categories = CategoryMap(std::move(categories));
  out.embeddings.values.resize(n, d);
  out.acoustic.values.resize(n, L);

  Vector z(L), noise(d);
  Eigen::Index row = 0;
  for (int s = 0; s < spec.n_speakers; ++s) {
    const std::string speaker = fmt::format("spk{:02d}", s);
    for (int u = 0; u < spec.utterances_per_speaker; ++u, ++row) {
      for (Eigen::Index l = 0; l < L; ++l) z[l] = rng.normal();
      for (Eigen::Index j = 0; j < d; ++j) noise[j] = rng.normal();

      out.embeddings.values.row(row) = noise.transpose();
      for (std::size_t p = 0; p < spec.planted_dims.size(); ++p) {
        double signal = 0.0;
        for (std::size_t l = 0; l < informative.size(); ++l)
          signal += mixing(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) *
                    z[static_cast<Eigen::Index>(informative[l])];
        const auto dim = spec.planted_dims[p];
        out.embeddings.values(row, dim) = signal + spec.noise_sigma * noise[dim];
      }
      out.acoustic.values.row(row) = z.transpose();

      UtteranceRecord rec{fmt::format("{}_u{:03d}", speaker, u), speaker, "synth",
                          z[static_cast<Eigen::Index>(label_index)] > 0.0 ? std::string(kSynthEmotion)
                                                                          : std::string(kDefaultNeutralLabel)};
      out.embeddings.rows.push_back(rec);
      out.acoustic.rows.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace emprobe
