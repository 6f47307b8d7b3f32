#include "glrc/student.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "glrc/error.hpp"
#include "glrc/parallel.hpp"

namespace glrc {

StudentModel::StudentModel(NodeLayout layout, StudentConfig config, Rng& init_rng)
    : layout_(layout), config_(config) {
  if (config_.dim == 0) throw ConfigError("student: dim must be >= 1");
  embeddings_ = xavier_init(layout_.total(), config_.dim, init_rng);
  for (std::uint32_t l = 0; l < config_.layers; ++l) {
    weights_.push_back(xavier_init(config_.dim, config_.dim, init_rng));
  }
}

StudentModel::StudentModel(NodeLayout layout, StudentConfig config, DenseMatrix embeddings,
                           std::vector<DenseMatrix> weights)
    : layout_(layout), config_(config), embeddings_(std::move(embeddings)), weights_(std::move(weights)) {
  if (embeddings_.rows() != layout_.total() || embeddings_.cols() != config_.dim) {
    throw InvalidShape("student: embeddings must be (users+items) x dim");
  }
  if (weights_.size() != config_.layers) {
    throw InvalidShape("student: expected " + std::to_string(config_.layers) + " weight matrices");
  }
  for (const auto& w : weights_) {
    if (w.rows() != config_.dim || w.cols() != config_.dim) {
      throw InvalidShape("student: weight matrices must be dim x dim");
    }
  }
}

DenseMatrix& StudentModel::mutable_embeddings() {
  ++version_;
  return embeddings_;
}

DenseMatrix& StudentModel::mutable_weight(std::size_t layer) {
  ++version_;
  return weights_.at(layer);
}

namespace {

// out = x * W^T, row by row.
void apply_transform(const DenseMatrix& x, const DenseMatrix& w, DenseMatrix& out,
                     std::size_t begin, std::size_t end) {
  const std::size_t d = w.rows();
  for (std::size_t r = begin; r < end; ++r) {
    const auto xr = x.row(r);
    auto dst = out.row(r);
    for (std::size_t a = 0; a < d; ++a) dst[a] = dot(w.row(a), xr);
  }
}

// In place: x <- leaky(p) + x.
void residual_activation(const DenseMatrix& pre, DenseMatrix& x, double slope,
                         std::size_t begin, std::size_t end) {
  for (std::size_t r = begin; r < end; ++r) {
    const auto p = pre.row(r);
    auto xr = x.row(r);
    for (std::size_t c = 0; c < xr.size(); ++c) xr[c] += p[c] > 0.0 ? p[c] : slope * p[c];
  }
}

}  // namespace

StudentCache student_forward(const StudentModel& model, std::span<const std::uint32_t> nodes) {
  const auto d = model.config().dim;
  StudentCache cache;
  cache.nodes.assign(nodes.begin(), nodes.end());
  cache.model_version = model.version();
  DenseMatrix x(nodes.size(), d);
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    if (nodes[r] >= model.layout().total()) {
      throw InvalidInput("student_forward: node index " + std::to_string(nodes[r]) + " out of range");
    }
    const auto src = model.embeddings().row(nodes[r]);
    std::copy(src.begin(), src.end(), x.row(r).begin());
  }
  for (const auto& w : model.weights()) {
    DenseMatrix pre(nodes.size(), d);
    cache.inputs.push_back(x);
    parallel_for(nodes.size(), [&](std::size_t b, std::size_t e) {
      apply_transform(x, w, pre, b, e);
      residual_activation(pre, x, model.config().leaky_slope, b, e);
    }, 512);
    cache.preacts.push_back(std::move(pre));
  }
  cache.output = std::move(x);
  return cache;
}

StudentCache student_forward_all(const StudentModel& model) {
  std::vector<std::uint32_t> nodes(model.layout().total());
  std::iota(nodes.begin(), nodes.end(), 0u);
  return student_forward(model, nodes);
}

DenseMatrix student_embed_all(const StudentModel& model, std::size_t chunk_rows) {
  chunk_rows = std::max<std::size_t>(chunk_rows, 1);
  const std::size_t total = model.layout().total();
  const auto d = model.config().dim;
  DenseMatrix out = model.embeddings();
  DenseMatrix pre(std::min(chunk_rows, total), d);
  for (std::size_t begin = 0; begin < total; begin += chunk_rows) {
    const std::size_t end = std::min(total, begin + chunk_rows);
    for (const auto& w : model.weights()) {
      parallel_for(end - begin, [&](std::size_t b, std::size_t e) {
        for (std::size_t r = begin + b; r < begin + e; ++r) {
          const auto xr = out.row(r);
          auto p = pre.row(r - begin);
          for (std::size_t a = 0; a < d; ++a) p[a] = dot(w.row(a), xr);
        }
        for (std::size_t r = begin + b; r < begin + e; ++r) {
          const auto p = pre.row(r - begin);
          auto xr = out.row(r);
          for (std::size_t c = 0; c < d; ++c) {
            xr[c] += p[c] > 0.0 ? p[c] : model.config().leaky_slope * p[c];
          }
        }
      }, 512);
    }
  }
  return out;
}

StudentGrads student_backward(const StudentModel& model, const StudentCache& cache,
                              const DenseMatrix& upstream) {
  if (cache.model_version != model.version()) {
    throw ContractViolation("student_backward: forward cache is stale");
  }
  if (cache.inputs.size() != model.weights().size()) {
    throw ContractViolation("student_backward: cache layer count mismatch");
  }
  const auto d = model.config().dim;
  if (upstream.rows() != cache.nodes.size() || upstream.cols() != d) {
    throw InvalidShape("student_backward: upstream must have one row per cached node");
  }
  const double slope = model.config().leaky_slope;
  StudentGrads grads{DenseMatrix(model.layout().total(), d), {}};
  grads.weights.assign(model.weights().size(), DenseMatrix(d, d));

  DenseMatrix g = upstream;
  DenseMatrix dpre(g.rows(), d);
  for (std::size_t l = model.weights().size(); l-- > 0;) {
    const auto& w = model.weights()[l];
    const auto& pre = cache.preacts[l];
    const auto& in = cache.inputs[l];
    auto& dw = grads.weights[l];
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto p = pre.row(r);
      const auto gr = g.row(r);
      auto dp = dpre.row(r);
      for (std::size_t c = 0; c < d; ++c) dp[c] = gr[c] * (p[c] > 0.0 ? 1.0 : slope);
      // dW += dp (outer) x
      const auto xr = in.row(r);
      for (std::size_t a = 0; a < d; ++a) {
        if (dp[a] != 0.0) axpy(dw.row(a), xr, dp[a]);
      }
    }
    // g <- g + dp * W (residual path plus transform path)
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto dp = dpre.row(r);
      auto gr = g.row(r);
      for (std::size_t a = 0; a < d; ++a) {
        if (dp[a] != 0.0) axpy(gr, w.row(a), dp[a]);
      }
    }
  }
  for (std::size_t r = 0; r < cache.nodes.size(); ++r) {
    axpy(grads.embeddings.row(cache.nodes[r]), g.row(r), 1.0);
  }
  return grads;
}

}  // namespace glrc
