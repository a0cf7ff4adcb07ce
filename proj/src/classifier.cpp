#include "kgtext/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace kgtext {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

void validate_labels(const std::vector<std::vector<LabelId>>& Y,
                     std::size_t n_labels, ClassifierMode mode) {
  for (std::size_t i = 0; i < Y.size(); ++i) {
    if (mode == ClassifierMode::multinomial && Y[i].size() != 1) {
      throw std::invalid_argument(
          "multinomial training needs exactly one label per sample; sample " +
          std::to_string(i) + " has " + std::to_string(Y[i].size()));
    }
    for (const LabelId label : Y[i]) {
      if (label < 0 || static_cast<std::size_t>(label) >= n_labels) {
        throw std::invalid_argument("label id " + std::to_string(label) +
                                    " out of range at sample " +
                                    std::to_string(i));
      }
    }
  }
}

struct Standardization {
  std::vector<double> mean;
  std::vector<double> scale;
};

Standardization compute_standardization(const FeatureMatrix& X) {
  Standardization st;
  st.mean.assign(X.cols, 0.0);
  st.scale.assign(X.cols, 1.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    for (std::size_t j = 0; j < X.cols; ++j) st.mean[j] += x[j];
  }
  for (double& m : st.mean) m /= static_cast<double>(X.rows);
  std::vector<double> var(X.cols, 0.0);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    for (std::size_t j = 0; j < X.cols; ++j) {
      const double d = x[j] - st.mean[j];
      var[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < X.cols; ++j) {
    const double s = std::sqrt(var[j] / static_cast<double>(X.rows));
    st.scale[j] = s > 0.0 ? s : 1.0;  // constant features pass through
  }
  return st;
}

FeatureMatrix apply_standardization(const FeatureMatrix& X,
                                    const Standardization& st) {
  FeatureMatrix out;
  out.rows = X.rows;
  out.cols = X.cols;
  out.data.resize(X.data.size());
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    double* y = out.data.data() + i * out.cols;
    for (std::size_t j = 0; j < X.cols; ++j) {
      y[j] = (x[j] - st.mean[j]) / st.scale[j];
    }
  }
  return out;
}

// Full-batch descent on one label's binary objective; weights/bias are
// in-place slices of the model.
void fit_one_ovr_label(const FeatureMatrix& X, std::span<const char> y,
                       const FitConfig& config, std::span<double> w, double& b,
                       std::span<double> label_epoch_loss) {
  std::vector<double> grad_w(X.cols, 0.0);
  double grad_b = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss =
        ovr_label_loss(X, y, w, b, config.l2, &grad_w, &grad_b);
    if (!label_epoch_loss.empty()) label_epoch_loss[epoch] = loss;
    for (std::size_t j = 0; j < X.cols; ++j) {
      w[j] -= config.learning_rate * grad_w[j];
    }
    b -= config.learning_rate * grad_b;
  }
}

void write_doubles(std::ofstream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& values,
                  std::size_t count, const std::filesystem::path& path) {
  values.resize(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double)) {
    throw std::runtime_error("truncated model file: " + path.string());
  }
}

}  // namespace

void FeatureMatrix::add_row(std::span<const double> x) {
  if (rows == 0 && cols == 0) cols = x.size();
  if (x.size() != cols) {
    throw std::invalid_argument("feature row of size " +
                                std::to_string(x.size()) + " added to " +
                                std::to_string(cols) + "-column matrix");
  }
  data.insert(data.end(), x.begin(), x.end());
  ++rows;
}

std::string_view to_string(ClassifierMode mode) {
  switch (mode) {
    case ClassifierMode::multinomial: return "multinomial";
    case ClassifierMode::one_vs_rest: return "one-vs-rest";
  }
  throw std::logic_error("unknown classifier mode");
}

ClassifierMode parse_classifier_mode(std::string_view name) {
  if (name == "multinomial") return ClassifierMode::multinomial;
  if (name == "one-vs-rest" || name == "ovr") return ClassifierMode::one_vs_rest;
  throw std::invalid_argument("unknown classifier mode: " + std::string(name));
}

double multinomial_loss(const FeatureMatrix& X, std::span<const LabelId> y,
                        std::span<const double> weights,
                        std::span<const double> biases, std::size_t n_labels,
                        double l2, std::vector<double>* grad_weights,
                        std::vector<double>* grad_biases) {
  if (grad_weights != nullptr) {
    grad_weights->assign(n_labels * X.cols, 0.0);
  }
  if (grad_biases != nullptr) grad_biases->assign(n_labels, 0.0);
  const double inv_n = 1.0 / static_cast<double>(X.rows);
  double loss = 0.0;
  std::vector<double> z(n_labels);
  std::vector<double> p(n_labels);
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    for (std::size_t c = 0; c < n_labels; ++c) {
      const double* w = weights.data() + c * X.cols;
      double acc = biases[c];
      for (std::size_t j = 0; j < X.cols; ++j) acc += w[j] * x[j];
      z[c] = acc;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < n_labels; ++c) {
      p[c] = std::exp(z[c] - zmax);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    const auto yi = static_cast<std::size_t>(y[i]);
    loss += inv_n * (zmax + std::log(sum) - z[yi]);
    if (grad_weights == nullptr && grad_biases == nullptr) continue;
    for (std::size_t c = 0; c < n_labels; ++c) {
      const double g = inv_n * (p[c] - (c == yi ? 1.0 : 0.0));
      if (grad_biases != nullptr) (*grad_biases)[c] += g;
      if (grad_weights != nullptr) {
        double* gw = grad_weights->data() + c * X.cols;
        for (std::size_t j = 0; j < X.cols; ++j) gw[j] += g * x[j];
      }
    }
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    loss += l2 * weights[k] * weights[k];
    if (grad_weights != nullptr) (*grad_weights)[k] += 2.0 * l2 * weights[k];
  }
  return loss;
}

double ovr_label_loss(const FeatureMatrix& X, std::span<const char> y,
                      std::span<const double> w, double b, double l2,
                      std::vector<double>* grad_w, double* grad_b) {
  if (grad_w != nullptr) grad_w->assign(X.cols, 0.0);
  if (grad_b != nullptr) *grad_b = 0.0;
  const double inv_n = 1.0 / static_cast<double>(X.rows);
  double loss = 0.0;
  for (std::size_t i = 0; i < X.rows; ++i) {
    const auto x = X.row(i);
    double z = b;
    for (std::size_t j = 0; j < X.cols; ++j) z += w[j] * x[j];
    const double yi = y[i] != 0 ? 1.0 : 0.0;
    loss += inv_n * (softplus(z) - yi * z);
    if (grad_w == nullptr && grad_b == nullptr) continue;
    const double g = inv_n * (sigmoid(z) - yi);
    if (grad_b != nullptr) *grad_b += g;
    if (grad_w != nullptr) {
      for (std::size_t j = 0; j < X.cols; ++j) (*grad_w)[j] += g * x[j];
    }
  }
  for (std::size_t j = 0; j < w.size(); ++j) {
    loss += l2 * w[j] * w[j];
    if (grad_w != nullptr) (*grad_w)[j] += 2.0 * l2 * w[j];
  }
  return loss;
}

double ovr_loss(const FeatureMatrix& X,
                const std::vector<std::vector<LabelId>>& Y,
                std::span<const double> weights, std::span<const double> biases,
                std::size_t n_labels, double l2,
                std::vector<double>* grad_weights,
                std::vector<double>* grad_biases) {
  if (grad_weights != nullptr) {
    grad_weights->assign(n_labels * X.cols, 0.0);
  }
  if (grad_biases != nullptr) grad_biases->assign(n_labels, 0.0);
  std::vector<std::vector<LabelId>> sorted = Y;
  for (auto& row : sorted) std::sort(row.begin(), row.end());
  std::vector<char> y(X.rows, 0);
  std::vector<double> grad_w;
  double grad_b = 0.0;
  double loss = 0.0;
  for (std::size_t c = 0; c < n_labels; ++c) {
    for (std::size_t i = 0; i < X.rows; ++i) {
      y[i] = std::binary_search(sorted[i].begin(), sorted[i].end(),
                                static_cast<LabelId>(c))
                 ? 1
                 : 0;
    }
    const std::span<const double> w{weights.data() + c * X.cols, X.cols};
    loss += ovr_label_loss(X, y, w, biases[c], l2,
                           grad_weights != nullptr ? &grad_w : nullptr,
                           grad_biases != nullptr ? &grad_b : nullptr);
    if (grad_weights != nullptr) {
      std::copy(grad_w.begin(), grad_w.end(),
                grad_weights->data() + c * X.cols);
    }
    if (grad_biases != nullptr) (*grad_biases)[c] = grad_b;
  }
  return loss;
}

LogRegModel fit(const FeatureMatrix& X,
                const std::vector<std::vector<LabelId>>& Y,
                ClassifierMode mode, const FitConfig& config,
                Vocabulary label_vocab, std::vector<double>* epoch_loss) {
  if (X.rows == 0) throw std::invalid_argument("cannot fit on zero samples");
  if (Y.size() != X.rows) {
    throw std::invalid_argument("feature/label row count mismatch");
  }
  const std::size_t n_labels = label_vocab.size();
  if (n_labels == 0) throw std::invalid_argument("empty label vocabulary");
  validate_labels(Y, n_labels, mode);
  if (config.epochs < 0 || config.learning_rate < 0.0 || config.l2 < 0.0) {
    throw std::invalid_argument("negative classifier hyperparameter");
  }

  LogRegModel model;
  model.mode = mode;
  model.n_labels = n_labels;
  model.dim = X.cols;
  model.weights.assign(n_labels * X.cols, 0.0);
  model.biases.assign(n_labels, 0.0);
  model.label_vocab = std::move(label_vocab);

  const FeatureMatrix* train = &X;
  FeatureMatrix scaled;
  if (config.standardize) {
    const Standardization st = compute_standardization(X);
    scaled = apply_standardization(X, st);
    train = &scaled;
    model.standardized = true;
    model.feature_mean = st.mean;
    model.feature_scale = st.scale;
  }

  if (epoch_loss != nullptr) epoch_loss->assign(config.epochs, 0.0);

  if (mode == ClassifierMode::multinomial) {
    std::vector<LabelId> y(X.rows);
    for (std::size_t i = 0; i < X.rows; ++i) y[i] = Y[i][0];
    std::vector<double> grad_w;
    std::vector<double> grad_b;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const double loss =
          multinomial_loss(*train, y, model.weights, model.biases, n_labels,
                           config.l2, &grad_w, &grad_b);
      if (epoch_loss != nullptr) (*epoch_loss)[epoch] = loss;
      for (std::size_t k = 0; k < model.weights.size(); ++k) {
        model.weights[k] -= config.learning_rate * grad_w[k];
      }
      for (std::size_t c = 0; c < n_labels; ++c) {
        model.biases[c] -= config.learning_rate * grad_b[c];
      }
    }
    return model;
  }

  // One-vs-rest: labels are independent, so blocks of labels can train on
  // separate threads without changing any result.
  std::vector<std::vector<LabelId>> sorted = Y;
  for (auto& row : sorted) std::sort(row.begin(), row.end());
  std::vector<double> label_losses;
  if (epoch_loss != nullptr) {
    label_losses.assign(n_labels * static_cast<std::size_t>(config.epochs),
                        0.0);
  }
  const auto train_block = [&](std::size_t begin, std::size_t end) {
    std::vector<char> y(X.rows, 0);
    for (std::size_t c = begin; c < end; ++c) {
      for (std::size_t i = 0; i < X.rows; ++i) {
        y[i] = std::binary_search(sorted[i].begin(), sorted[i].end(),
                                  static_cast<LabelId>(c))
                   ? 1
                   : 0;
      }
      std::span<double> w{model.weights.data() + c * X.cols, X.cols};
      std::span<double> losses;
      if (epoch_loss != nullptr) {
        losses = {label_losses.data() +
                      c * static_cast<std::size_t>(config.epochs),
                  static_cast<std::size_t>(config.epochs)};
      }
      fit_one_ovr_label(*train, y, config, w, model.biases[c], losses);
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(
      std::max(config.threads, 1), n_labels);
  if (n_threads <= 1) {
    train_block(0, n_labels);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(n_threads);
    const std::size_t chunk = (n_labels + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(begin + chunk, n_labels);
      workers.emplace_back([&, t, begin, end] {
        try {
          train_block(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  }
  if (epoch_loss != nullptr) {
    // Sum per-label losses in label order for a reproducible total.
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      double total = 0.0;
      for (std::size_t c = 0; c < n_labels; ++c) {
        total += label_losses[c * static_cast<std::size_t>(config.epochs) +
                              static_cast<std::size_t>(epoch)];
      }
      (*epoch_loss)[static_cast<std::size_t>(epoch)] = total;
    }
  }
  return model;
}

RankedPrediction predict_ranked(const LogRegModel& model,
                                std::span<const double> x) {
  if (x.size() != model.dim) {
    throw std::invalid_argument("feature vector of size " +
                                std::to_string(x.size()) +
                                " scored against model of dim " +
                                std::to_string(model.dim));
  }
  std::vector<double> xs;
  if (model.standardized) {
    xs.resize(model.dim);
    for (std::size_t j = 0; j < model.dim; ++j) {
      xs[j] = (x[j] - model.feature_mean[j]) / model.feature_scale[j];
    }
    x = xs;
  }
  std::vector<double> z(model.n_labels);
  for (std::size_t c = 0; c < model.n_labels; ++c) {
    const double* w = model.weights.data() + c * model.dim;
    double acc = model.biases[c];
    for (std::size_t j = 0; j < model.dim; ++j) acc += w[j] * x[j];
    z[c] = acc;
  }
  std::vector<double> scores(model.n_labels);
  if (model.mode == ClassifierMode::multinomial) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < model.n_labels; ++c) {
      scores[c] = std::exp(z[c] - zmax);
      sum += scores[c];
    }
    for (double& s : scores) s /= sum;
  } else {
    for (std::size_t c = 0; c < model.n_labels; ++c) scores[c] = sigmoid(z[c]);
  }
  RankedPrediction out;
  out.labels.resize(model.n_labels);
  std::iota(out.labels.begin(), out.labels.end(), 0);
  std::sort(out.labels.begin(), out.labels.end(),
            [&](LabelId a, LabelId b) {
              const double sa = scores[static_cast<std::size_t>(a)];
              const double sb = scores[static_cast<std::size_t>(b)];
              if (sa != sb) return sa > sb;
              return a < b;
            });
  out.scores.resize(model.n_labels);
  for (std::size_t i = 0; i < model.n_labels; ++i) {
    out.scores[i] = scores[static_cast<std::size_t>(out.labels[i])];
  }
  return out;
}

void save_model(const LogRegModel& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["mode"] = std::string(to_string(model.mode));
  header["n_labels"] = model.n_labels;
  header["dim"] = model.dim;
  header["labels"] = model.label_vocab.symbols();
  header["standardized"] = model.standardized;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  out << header.dump() << '\n';
  write_doubles(out, model.weights);
  write_doubles(out, model.biases);
  if (model.standardized) {
    write_doubles(out, model.feature_mean);
    write_doubles(out, model.feature_scale);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

LogRegModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read model: " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("missing model header: " + path.string());
  }
  const nlohmann::json header = nlohmann::json::parse(line);
  LogRegModel model;
  model.mode = parse_classifier_mode(header.at("mode").get<std::string>());
  model.n_labels = header.at("n_labels").get<std::size_t>();
  model.dim = header.at("dim").get<std::size_t>();
  model.standardized = header.at("standardized").get<bool>();
  const auto labels = header.at("labels").get<std::vector<std::string>>();
  if (labels.size() != model.n_labels) {
    throw std::runtime_error("label list does not match n_labels: " +
                             path.string());
  }
  for (const auto& symbol : labels) model.label_vocab.add(symbol);
  read_doubles(in, model.weights, model.n_labels * model.dim, path);
  read_doubles(in, model.biases, model.n_labels, path);
  if (model.standardized) {
    read_doubles(in, model.feature_mean, model.dim, path);
    read_doubles(in, model.feature_scale, model.dim, path);
  }
  return model;
}

}  // namespace kgtext
