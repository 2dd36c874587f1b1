#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emprobe/dataio.hpp"
#include "emprobe/probe.hpp"

namespace emprobe {

struct LatentSpec {
  std::string name;
  bool informative = true;  // mixed into the planted embedding dims
  std::string category = "Energy";
};

// Ground-truth generator for pipeline validation.
//
// Draw order from Rng(seed), all standard normal:
//   1. mixing weights a[p][l], planted dim p (listed order) x informative latent l;
//      each row is then scaled to unit norm
//   2. per utterance (speaker-major): every latent in listed order, then one
//      noise draw per embedding dim 0..embed_dim-1
// Planted dim p = sum_l a[p][l] * z_l + noise_sigma * noise_p; every other
// dim is its noise draw. The acoustic table holds the latents verbatim and
// the label is "emo" when the label latent is positive, else "neutral".
struct SynthSpec {
  int n_speakers = 12;
  int utterances_per_speaker = 20;
  int embed_dim = 128;
  std::vector<int> planted_dims{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<LatentSpec> latents{{"latent.signal", true, "Energy"}, {"latent.decoy", false, "Temporal"}};
  double noise_sigma = 0.1;
  std::string label_latent = "latent.signal";
  std::uint64_t seed = 0;
};

inline constexpr std::string_view kSynthEmotion = "emo";

struct SynthData {
  FeatureTable embeddings;
  FeatureTable acoustic;
  CategoryMap categories;
};

// Throws InputError describing the first invalid field.
void validate_spec(const SynthSpec& spec);

SynthData generate(const SynthSpec& spec);

}  // namespace emprobe
