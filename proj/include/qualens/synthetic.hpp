#ifndef QUALENS_SYNTHETIC_HPP
#define QUALENS_SYNTHETIC_HPP

#include "qualens/evaluation.hpp"
#include "qualens/model.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace qualens {

struct SynthSpec {
    std::size_t n_systems = 500;
    std::size_t n_measures = 60;
    std::size_t n_informative = 10;
    std::size_t n_expert = 0;
    /// Share of the root utility carried by the expert factors.
    double expert_weight = 0.0;
    /// Standard deviation of the root-utility contribution of the background
    /// measures; 0 leaves them unreferenced by the model.
    double noise_sd = 0.0;
    /// Standard deviation of each factor's contribution before clamping.
    double spread = 0.024;
    /// Share of every measure's variance coming from one latent system-level
    /// quality, oriented so that it moves all contributions the same way.
    double correlation = 0.0;
    std::size_t n_holdout = 15;
    /// Leave expert values out of the training systems. When false the
    /// training corpus carries them too, so a dataset can be graded with
    /// them and trained without them (an unobserved influence on y).
    bool withhold_expert = true;
    std::uint64_t seed = 7;
};

struct SynthCorpus {
    SynthSpec spec;
    QualityModel model;
    /// Training systems; expert measures are absent unless
    /// spec.withhold_expert is false.
    std::vector<SystemMeasurements> training;
    /// Holdout systems with every measure present.
    std::vector<SystemMeasurements> holdout;
    std::vector<std::string> informative;
    std::vector<std::string> expert;
    std::vector<std::string> background;
    /// Generating parameters and effective root weights, as JSON.
    std::string truth_json;
};

/// Builds a model whose root utility is a weighted sum of clamped linear
/// contributions of the informative, expert and background measures,
/// centred on utility 0.94.
SynthCorpus gen_synthetic(const SynthSpec& spec);

/// Writes model.json, measures.csv, holdout.csv and truth.json.
void write_synthetic(const SynthCorpus& corpus, const std::filesystem::path& dir);

/// Mean and standard deviation of clamp(center + spread * Z, 0, 1) for a
/// standard normal Z.
std::pair<double, double> clamped_normal_moments(double center, double spread);

} // namespace qualens

#endif
