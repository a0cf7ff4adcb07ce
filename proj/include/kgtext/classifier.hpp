// Linear classifiers over feature vectors: multinomial softmax regression and
// one-vs-rest binary logistic regression, trained by full-batch gradient
// descent (convex, zero-initialized, deterministic). Data terms are means
// over samples; the L2 penalty applies to weights, never biases.
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kgtext/kg_store.hpp"
#include "kgtext/util.hpp"

namespace kgtext {

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;  // row-major

  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  void add_row(std::span<const double> x);
};

enum class ClassifierMode { multinomial, one_vs_rest };
std::string_view to_string(ClassifierMode mode);
ClassifierMode parse_classifier_mode(std::string_view name);

struct FitConfig {
  double learning_rate = 0.5;
  int epochs = 300;
  double l2 = 1e-4;
  std::uint64_t seed = 0;  // reserved; the zero-init path is deterministic
  bool standardize = false;
  int threads = 1;  // one-vs-rest labels train in parallel blocks
};

// Every label in the vocabulary is scored and returned, best first; equal
// scores order by ascending label id.
struct RankedPrediction {
  std::vector<LabelId> labels;
  std::vector<double> scores;
};

struct LogRegModel {
  ClassifierMode mode = ClassifierMode::multinomial;
  std::size_t n_labels = 0;
  std::size_t dim = 0;
  std::vector<double> weights;  // n_labels x dim
  std::vector<double> biases;   // n_labels
  Vocabulary label_vocab;
  bool standardized = false;
  std::vector<double> feature_mean;   // dim, when standardized
  std::vector<double> feature_scale;  // dim, when standardized
};

// Multinomial requires exactly one label per sample; one-vs-rest accepts any
// number (including none). Label ids must fall inside label_vocab.
// epoch_loss, when given, receives the full training objective per epoch.
LogRegModel fit(const FeatureMatrix& X,
                const std::vector<std::vector<LabelId>>& Y,
                ClassifierMode mode, const FitConfig& config,
                Vocabulary label_vocab,
                std::vector<double>* epoch_loss = nullptr);

// Scores are softmax probabilities (multinomial) or per-label sigmoids
// (one-vs-rest).
RankedPrediction predict_ranked(const LogRegModel& model,
                                std::span<const double> x);

// One JSON header line (mode, dims, label symbols, standardization flag)
// followed by native-endian binary doubles: weights, biases, and the
// standardization vectors when present.
void save_model(const LogRegModel& model, const std::filesystem::path& path);
LogRegModel load_model(const std::filesystem::path& path);

// --- loss primitives (exposed for finite-difference verification) ---

// Mean cross-entropy of softmax(Wx+b) plus l2*|W|^2. Gradient buffers may be
// null; when given they must be sized n_labels*dim and n_labels.
double multinomial_loss(const FeatureMatrix& X, std::span<const LabelId> y,
                        std::span<const double> weights,
                        std::span<const double> biases, std::size_t n_labels,
                        double l2, std::vector<double>* grad_weights,
                        std::vector<double>* grad_biases);

// Binary logistic loss for one label column: mean over samples of
// softplus(z) - y*z, plus l2*|w|^2.
double ovr_label_loss(const FeatureMatrix& X, std::span<const char> y,
                      std::span<const double> w, double b, double l2,
                      std::vector<double>* grad_w, double* grad_b);

// Sum of ovr_label_loss over all labels (the full one-vs-rest objective).
double ovr_loss(const FeatureMatrix& X,
                const std::vector<std::vector<LabelId>>& Y,
                std::span<const double> weights, std::span<const double> biases,
                std::size_t n_labels, double l2,
                std::vector<double>* grad_weights,
                std::vector<double>* grad_biases);

}  // namespace kgtext
