#include "graphex/embedding.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <Eigen/Sparse>

#include "graphex/util.hpp"

namespace graphex {

namespace {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

constexpr std::uint64_t kInferencePass = ~std::uint64_t{0};
constexpr std::uint64_t kNeighborhoodTag = 0x6e6268;
constexpr std::uint64_t kContextTag = 0x637478;
constexpr std::uint64_t kNegativeTag = 0x6e6567;
constexpr std::uint64_t kInitTag = 0x696e69;
constexpr std::uint64_t kFallbackTag = 0x666c62;

std::uint64_t neighborhood_seed(const TrainConfig& config,
                                std::uint64_t version, std::uint64_t pass,
                                std::size_t layer, ItemId id) {
  return mix_seed(config.seed, kNeighborhoodTag, version, pass, layer, id);
}

double sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Matrix activate(const Matrix& z, Activation a) {
  return a == Activation::kRelu ? Matrix(z.cwiseMax(0.0)) : z;
}

// Row-mean aggregation operator for one layer: row i averages the sampled
// neighborhood of node i; rows with no neighbors are zero.
SparseRows aggregation_operator(const ItemGraph& graph,
                                const TrainConfig& config, std::uint64_t pass,
                                std::size_t layer) {
  const auto n = static_cast<Eigen::Index>(graph.node_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(graph.node_count() * config.fanouts[layer]);
  for (std::size_t i = 0; i < graph.node_count(); ++i) {
    const auto nb = graph.sample_neighbor_indices(
        i, config.fanouts[layer], config.walk_length,
        neighborhood_seed(config, graph.version(), pass, layer, graph.id_at(i)));
    const double w = nb.empty() ? 0.0 : 1.0 / static_cast<double>(nb.size());
    for (std::size_t j : nb)
      triplets.emplace_back(static_cast<Eigen::Index>(i),
                            static_cast<Eigen::Index>(j), w);
  }
  SparseRows a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Matrix feature_matrix(const ItemGraph& graph) {
  Matrix x(static_cast<Eigen::Index>(graph.node_count()),
           static_cast<Eigen::Index>(graph.feature_dim()));
  for (std::size_t i = 0; i < graph.node_count(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = graph.features_at(i).transpose();
  return x;
}

struct ForwardPass {
  std::vector<Matrix> hidden;  // hidden[0] = features, hidden[L] = output
  std::vector<Matrix> concat;
  std::vector<Matrix> pre;
};

ForwardPass forward(const Matrix& features, const LayerWeights& weights,
                    std::span<const SparseRows> aggregators) {
  ForwardPass f;
  f.hidden.push_back(features);
  for (std::size_t l = 0; l < weights.layers.size(); ++l) {
    const Matrix& h = f.hidden.back();
    Matrix c(h.rows(), 2 * h.cols());
    c.leftCols(h.cols()) = h;
    c.rightCols(h.cols()) = aggregators[l] * h;
    Matrix z = c * weights.layers[l].weight.transpose();
    f.hidden.push_back(activate(z, weights.layers[l].activation));
    f.concat.push_back(std::move(c));
    f.pre.push_back(std::move(z));
  }
  return f;
}

struct PairBatch {
  std::vector<std::pair<std::size_t, std::size_t>> positives;
  std::vector<std::size_t> negatives;  // negatives_per_positive per positive
};

PairBatch sample_pairs(const ItemGraph& graph, const TrainConfig& config,
                       std::uint64_t epoch) {
  PairBatch batch;
  const std::size_t n = graph.node_count();
  for (std::size_t u = 0; u < n; ++u) {
    if (graph.neighbors_at(u).empty()) continue;
    const auto ctx = graph.sample_neighbor_indices(
        u, config.context_size, config.walk_length,
        mix_seed(config.seed, kContextTag, graph.version(), epoch, graph.id_at(u)));
    for (std::size_t v : ctx) batch.positives.emplace_back(u, v);
  }
  if (n < 2) {
    batch.positives.clear();
    return batch;
  }
  std::mt19937_64 rng(mix_seed(config.seed, kNegativeTag, graph.version(), epoch));
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  batch.negatives.reserve(batch.positives.size() * config.negatives);
  for (const auto& [u, v] : batch.positives) {
    for (std::size_t k = 0; k < config.negatives; ++k) {
      std::size_t w = pick(rng);
      if (w >= u) ++w;  // uniform over nodes other than u
      batch.negatives.push_back(w);
    }
  }
  return batch;
}

// Accumulates d(loss)/d(normalized embedding) for pairs [begin, end).
double pair_gradients(const Matrix& emb, const PairBatch& batch,
                      const TrainConfig& config, std::size_t begin,
                      std::size_t end, Matrix& grad) {
  const double tau = config.temperature;
  double loss = 0.0;
  for (std::size_t p = begin; p < end; ++p) {
    const auto [u, v] = batch.positives[p];
    const auto ui = static_cast<Eigen::Index>(u);
    const auto vi = static_cast<Eigen::Index>(v);
    const double s = tau * emb.row(ui).dot(emb.row(vi));
    loss += softplus(-s);
    const double g = -sigmoid(-s) * tau;
    grad.row(ui) += g * emb.row(vi);
    grad.row(vi) += g * emb.row(ui);
    for (std::size_t k = 0; k < config.negatives; ++k) {
      const auto wi =
          static_cast<Eigen::Index>(batch.negatives[p * config.negatives + k]);
      const double sn = tau * emb.row(ui).dot(emb.row(wi));
      loss += softplus(sn);
      const double gn = sigmoid(sn) * tau;
      grad.row(ui) += gn * emb.row(wi);
      grad.row(wi) += gn * emb.row(ui);
    }
  }
  return loss;
}

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::size_t step = 0;
};

TrainResult run_training(const ItemGraph& graph, const TrainConfig& config,
                         LayerWeights weights, std::size_t epochs) {
  const Matrix features = feature_matrix(graph);
  const std::size_t n_layers = weights.layers.size();
  const auto n = static_cast<Eigen::Index>(graph.node_count());

  AdamState adam;
  for (const auto& layer : weights.layers) {
    adam.m.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
    adam.v.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
  }
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  std::vector<double> losses;
  losses.reserve(epochs);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<SparseRows> aggregators;
    for (std::size_t l = 0; l < n_layers; ++l)
      aggregators.push_back(aggregation_operator(graph, config, epoch, l));
    const ForwardPass fwd = forward(features, weights, aggregators);

    const Matrix& out = fwd.hidden.back();
    Vector norms = out.rowwise().norm();
    Matrix emb = out;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (norms[i] > 1e-12)
        emb.row(i) /= norms[i];
      else
        emb.row(i) = fallback_unit_vector(graph.id_at(static_cast<std::size_t>(i)),
                                          static_cast<std::size_t>(out.cols()))
                         .transpose();
    }

    const PairBatch batch = sample_pairs(graph, config, epoch);
    if (batch.positives.empty()) {
      losses.push_back(0.0);
      continue;
    }

    Matrix grad_emb = Matrix::Zero(emb.rows(), emb.cols());
    double loss = 0.0;
    const std::size_t total = batch.positives.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min(config.threads, total));
    if (workers == 1) {
      loss = pair_gradients(emb, batch, config, 0, total, grad_emb);
    } else {
      std::vector<Matrix> partial(workers, Matrix::Zero(emb.rows(), emb.cols()));
      std::vector<double> partial_loss(workers, 0.0);
      {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            const std::size_t b = total * w / workers;
            const std::size_t e = total * (w + 1) / workers;
            partial_loss[w] = pair_gradients(emb, batch, config, b, e, partial[w]);
          });
        }
      }
      for (std::size_t w = 0; w < workers; ++w) {
        grad_emb += partial[w];
        loss += partial_loss[w];
      }
    }
    const double scale = 1.0 / static_cast<double>(total);
    losses.push_back(loss * scale);
    grad_emb *= scale;

    // Back through the row normalization; fallback rows carry no gradient.
    Matrix grad = Matrix::Zero(out.rows(), out.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
      if (norms[i] <= 1e-12) continue;
      const double proj = emb.row(i).dot(grad_emb.row(i));
      grad.row(i) = (grad_emb.row(i) - proj * emb.row(i)) / norms[i];
    }

    std::vector<Matrix> weight_grads(n_layers);
    for (std::size_t l = n_layers; l-- > 0;) {
      const Layer& layer = weights.layers[l];
      if (layer.activation == Activation::kRelu)
        grad = grad.cwiseProduct((fwd.pre[l].array() > 0.0).cast<double>().matrix());
      weight_grads[l] = grad.transpose() * fwd.concat[l];
      if (l == 0) break;
      const Matrix grad_concat = grad * layer.weight;
      const Eigen::Index d = static_cast<Eigen::Index>(layer.in_dim());
      grad = grad_concat.leftCols(d) + aggregators[l].transpose() * grad_concat.rightCols(d);
    }

    ++adam.step;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
    for (std::size_t l = 0; l < n_layers; ++l) {
      adam.m[l] = kBeta1 * adam.m[l] + (1.0 - kBeta1) * weight_grads[l];
      adam.v[l] = kBeta2 * adam.v[l] +
                  (1.0 - kBeta2) * weight_grads[l].cwiseProduct(weight_grads[l]);
      weights.layers[l].weight.array() -=
          config.learning_rate * (adam.m[l].array() / bc1) /
          ((adam.v[l].array() / bc2).sqrt() + kEps);
    }
  }

  TrainResult result;
  result.table = embed_graph(graph, weights, config);
  result.weights = std::move(weights);
  result.epoch_losses = std::move(losses);
  return result;
}

}  // namespace

void EmbeddingTable::insert(ItemId id, const Eigen::Ref<const Vector>& v) {
  if (contains(id))
    throw InvalidArgument("duplicate embedding for item " + std::to_string(id));
  if (static_cast<std::size_t>(v.size()) != dim_)
    throw InvalidArgument("embedding dimension " + std::to_string(v.size()) +
                          " != table " + std::to_string(dim_));
  if (!v.allFinite())
    throw InvalidArgument("non-finite embedding for item " + std::to_string(id));
  if (std::abs(v.norm() - 1.0) > kNormTolerance)
    throw InvalidArgument("embedding for item " + std::to_string(id) +
                          " is not unit-norm");
  index_.emplace(id, ids_.size());
  ids_.push_back(id);
  data_.insert(data_.end(), v.data(), v.data() + v.size());
}

std::size_t EmbeddingTable::index_of(ItemId id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw InvalidArgument("no embedding for item " + std::to_string(id));
  return it->second;
}

void LayerWeights::validate() const {
  if (layers.empty()) throw InvalidArgument("no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weight;
    if (w.rows() == 0 || w.cols() == 0 || w.cols() % 2 != 0)
      throw InvalidArgument("layer " + std::to_string(l) + " has bad shape");
    if (!w.allFinite())
      throw InvalidArgument("layer " + std::to_string(l) + " has non-finite weights");
    if (l > 0 && layers[l].in_dim() != layers[l - 1].out_dim())
      throw InvalidArgument("layer " + std::to_string(l) +
                            " input does not match previous output");
  }
}

bool operator==(const LayerWeights& a, const LayerWeights& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].activation != b.layers[l].activation) return false;
    if (a.layers[l].weight.rows() != b.layers[l].weight.rows() ||
        a.layers[l].weight.cols() != b.layers[l].weight.cols() ||
        a.layers[l].weight != b.layers[l].weight)
      return false;
  }
  return true;
}

void TrainConfig::validate() const {
  if (dims.empty()) throw InvalidArgument("need at least one layer");
  if (fanouts.size() != dims.size())
    throw InvalidArgument("one fanout per layer required");
  for (auto d : dims)
    if (d < 1) throw InvalidArgument("layer dims must be >= 1");
  for (auto f : fanouts)
    if (f < 1) throw InvalidArgument("fanouts must be >= 1");
  if (walk_length < 1 || context_size < 1 || negatives < 1 || epochs < 1 ||
      incremental_epochs < 1 || threads < 1)
    throw InvalidArgument("training counts must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
}

Vector aggregate_neighbors(std::span<const Vector> neighbor_embeddings,
                           std::size_t dim) {
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& v : neighbor_embeddings) {
    if (static_cast<std::size_t>(v.size()) != dim)
      throw InvalidArgument("neighbor embeddings have mixed dimensions");
    sum += v;
  }
  if (!neighbor_embeddings.empty())
    sum /= static_cast<double>(neighbor_embeddings.size());
  return sum;
}

Vector propagate(const Eigen::Ref<const Vector>& node_embedding,
                 const Eigen::Ref<const Vector>& neighborhood_embedding,
                 const LayerWeights& weights, std::size_t layer) {
  if (layer >= weights.layers.size())
    throw InvalidArgument("layer index out of range");
  const Layer& l = weights.layers[layer];
  const auto d = static_cast<Eigen::Index>(l.in_dim());
  if (node_embedding.size() != d || neighborhood_embedding.size() != d)
    throw InvalidArgument("propagate: expected input dimension " +
                          std::to_string(d));
  Vector concat(2 * d);
  concat << node_embedding, neighborhood_embedding;
  Vector z = l.weight * concat;
  if (l.activation == Activation::kRelu) z = z.cwiseMax(0.0);
  return z;
}

Vector fallback_unit_vector(ItemId id, std::size_t dim) {
  std::mt19937_64 rng(mix_seed(kFallbackTag, id));
  std::normal_distribution<double> gauss;
  Vector v(static_cast<Eigen::Index>(dim));
  do {
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-6);
  return v.normalized();
}

Vector normalize_or_fallback(Vector v, ItemId id) {
  const double norm = v.norm();
  if (norm > 1e-12 && std::isfinite(norm)) return v / norm;
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true))
    std::clog << "warning: zero-norm embedding for item " << id
              << ", using hashed fallback (reported once)\n";
  return fallback_unit_vector(id, static_cast<std::size_t>(v.size()));
}

LayerWeights init_weights(std::size_t feature_dim, const TrainConfig& config) {
  config.validate();
  if (feature_dim == 0) throw InvalidArgument("feature dimension is zero");
  LayerWeights w;
  std::size_t in = feature_dim;
  for (std::size_t l = 0; l < config.dims.size(); ++l) {
    const std::size_t out = config.dims[l];
    std::mt19937_64 rng(mix_seed(config.seed, kInitTag, l));
    const double limit = std::sqrt(6.0 / static_cast<double>(2 * in + out));
    std::uniform_real_distribution<double> uni(-limit, limit);
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(out),
                        static_cast<Eigen::Index>(2 * in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = uni(rng);
    layer.activation = l + 1 == config.dims.size() ? Activation::kIdentity
                                                   : Activation::kRelu;
    w.layers.push_back(std::move(layer));
    in = out;
  }
  return w;
}

TrainResult train_unsupervised(const ItemGraph& graph,
                               const TrainConfig& config) {
  if (graph.empty()) throw InvalidArgument("cannot train on an empty graph");
  config.validate();
  return run_training(graph, config, init_weights(graph.feature_dim(), config),
                      config.epochs);
}

TrainResult train_incremental(const ItemGraph& graph, const TrainConfig& config,
                              const LayerWeights& previous) {
  if (config.full_retrain) return train_unsupervised(graph, config);
  if (graph.empty()) throw InvalidArgument("cannot train on an empty graph");
  config.validate();
  previous.validate();
  if (previous.input_dim() != graph.feature_dim())
    throw InvalidArgument("warm-start weights do not match feature dimension");
  return run_training(graph, config, previous, config.incremental_epochs);
}

EmbeddingTable embed_graph(const ItemGraph& graph, const LayerWeights& weights,
                           const TrainConfig& config) {
  weights.validate();
  if (weights.input_dim() != graph.feature_dim())
    throw InvalidArgument("weights do not match graph feature dimension");
  std::vector<SparseRows> aggregators;
  for (std::size_t l = 0; l < weights.layers.size(); ++l)
    aggregators.push_back(aggregation_operator(graph, config, kInferencePass, l));
  const ForwardPass fwd = forward(feature_matrix(graph), weights, aggregators);
  const Matrix& out = fwd.hidden.back();
  EmbeddingTable table(weights.output_dim(), graph.version());
  for (std::size_t i = 0; i < graph.node_count(); ++i)
    table.insert(graph.id_at(i),
                 normalize_or_fallback(out.row(static_cast<Eigen::Index>(i)).transpose(),
                                       graph.id_at(i)));
  return table;
}

Vector embed_node(const ItemGraph& graph, const LayerWeights& weights,
                  const TrainConfig& config, ItemId id) {
  weights.validate();
  std::map<std::pair<std::size_t, std::size_t>, Vector> memo;
  auto rep = [&](auto&& self, std::size_t index, std::size_t level) -> Vector {
    if (level == 0) return graph.features_at(index);
    auto key = std::make_pair(index, level);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t l = level - 1;
    const auto nb = graph.sample_neighbor_indices(
        index, config.fanouts[l], config.walk_length,
        neighborhood_seed(config, graph.version(), kInferencePass, l,
                          graph.id_at(index)));
    std::vector<Vector> nb_reps;
    nb_reps.reserve(nb.size());
    for (std::size_t j : nb) nb_reps.push_back(self(self, j, l));
    const Vector own = self(self, index, l);
    Vector h = propagate(own, aggregate_neighbors(nb_reps, static_cast<std::size_t>(own.size())),
                         weights, l);
    memo.emplace(key, h);
    return h;
  };
  return normalize_or_fallback(rep(rep, graph.index_of(id), weights.layers.size()), id);
}

Vector infer_unseen(const Eigen::Ref<const Vector>& features,
                    const LayerWeights& weights, ItemId id) {
  weights.validate();
  if (static_cast<std::size_t>(features.size()) != weights.input_dim())
    throw InvalidArgument("feature dimension " + std::to_string(features.size()) +
                          " != trained " + std::to_string(weights.input_dim()));
  Vector h = features;
  for (std::size_t l = 0; l < weights.layers.size(); ++l)
    h = propagate(h, Vector::Zero(h.size()), weights, l);
  return normalize_or_fallback(std::move(h), id);
}

void write_table(const EmbeddingTable& table, std::ostream& out) {
  out << table.size() << '\t' << table.dim() << '\t' << table.graph_version() << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids()[i];
    const auto row = table.row(i);
    for (Eigen::Index c = 0; c < row.size(); ++c) out << '\t' << format_double(row[c]);
    out << '\n';
  }
}

namespace {

std::string next_line(std::istream& in, std::size_t& line_no, const char* what) {
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(std::string("unexpected end of file reading ") + what, line_no + 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::uint64_t to_uint(std::string_view tok, std::size_t line_no) {
  std::uint64_t v = 0;
  if (!parse_uint64(tok, v))
    throw ParseError("bad integer '" + std::string(tok) + "'", line_no);
  return v;
}

double to_real(std::string_view tok, std::size_t line_no) {
  double v = 0;
  if (!parse_double(tok, v))
    throw ParseError("bad number '" + std::string(tok) + "'", line_no);
  return v;
}

}  // namespace

EmbeddingTable read_table(std::istream& in) {
  std::size_t line_no = 0;
  const std::string header = next_line(in, line_no, "header");
  const auto h = split(header, '\t');
  if (h.size() != 3) throw ParseError("embedding header needs 3 fields", line_no);
  const auto count = to_uint(h[0], line_no);
  const auto dim = to_uint(h[1], line_no);
  EmbeddingTable table(dim, to_uint(h[2], line_no));
  Vector v(static_cast<Eigen::Index>(dim));
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::string line = next_line(in, line_no, "embedding row");
    const auto f = split(line, '\t');
    if (f.size() != dim + 1)
      throw ParseError("expected " + std::to_string(dim + 1) + " fields", line_no);
    const auto id = to_uint(f[0], line_no);
    for (std::size_t c = 0; c < dim; ++c) v[c] = to_real(f[c + 1], line_no);
    try {
      table.insert(static_cast<ItemId>(id), v);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return table;
}

void write_weights(const LayerWeights& weights, std::ostream& out) {
  out << weights.layers.size() << '\n';
  for (const auto& layer : weights.layers)
    out << layer.weight.rows() << '\t' << layer.weight.cols() << '\t'
        << (layer.activation == Activation::kRelu ? "relu" : "identity") << '\n';
  for (const auto& layer : weights.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        if (c > 0) out << '\t';
        out << format_double(layer.weight(r, c));
      }
      out << '\n';
    }
  }
}

LayerWeights read_weights(std::istream& in) {
  std::size_t line_no = 0;
  const auto count = to_uint(trim(next_line(in, line_no, "layer count")), line_no);
  LayerWeights w;
  for (std::uint64_t l = 0; l < count; ++l) {
    const std::string line = next_line(in, line_no, "layer shape");
    const auto f = split(line, '\t');
    if (f.size() != 3) throw ParseError("layer shape needs 3 fields", line_no);
    Layer layer;
    layer.weight.resize(static_cast<Eigen::Index>(to_uint(f[0], line_no)),
                        static_cast<Eigen::Index>(to_uint(f[1], line_no)));
    if (f[2] == "relu")
      layer.activation = Activation::kRelu;
    else if (f[2] == "identity")
      layer.activation = Activation::kIdentity;
    else
      throw ParseError("unknown activation '" + std::string(f[2]) + "'", line_no);
    w.layers.push_back(std::move(layer));
  }
  for (auto& layer : w.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      const std::string line = next_line(in, line_no, "weight row");
      const auto f = split(line, '\t');
      if (static_cast<Eigen::Index>(f.size()) != layer.weight.cols())
        throw ParseError("weight row has wrong width", line_no);
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = to_real(f[static_cast<std::size_t>(c)], line_no);
    }
  }
  try {
    w.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(e.what(), line_no);
  }
  return w;
}

void save_table(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write embedding table " + path.string());
  write_table(table, out);
}

EmbeddingTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding table " + path.string());
  return read_table(in);
}

void save_weights(const LayerWeights& weights, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write weights " + path.string());
  write_weights(weights, out);
}

LayerWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weights " + path.string());
  return read_weights(in);
}

}  // namespace graphex
