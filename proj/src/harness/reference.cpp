#include "umaml/harness/reference.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace umaml::reference {

namespace {

using Matrix = std::vector<std::vector<double>>;

Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

struct Pass {
  std::vector<Matrix> pre;   // z_l
  std::vector<Matrix> post;  // h_l, post[0] = x
};

Pass run_forward(const MlpSpec& spec, const ParamVector& params, const Tensor& x) {
  Pass p;
  p.post.push_back(to_matrix(x));
  const std::size_t layers = spec.num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const Tensor& w = params[2 * l].value;
    const Tensor& b = params[2 * l + 1].value;
    const Matrix& in = p.post.back();
    Matrix z(in.size(), std::vector<double>(w.rows()));
    for (std::size_t r = 0; r < in.size(); ++r) {
      for (std::size_t o = 0; o < w.rows(); ++o) {
        double acc = b[o];
        for (std::size_t i = 0; i < w.cols(); ++i) acc += in[r][i] * w.at(o, i);
        z[r][o] = acc;
      }
    }
    Matrix h = z;
    if (l + 1 < layers) {
      for (auto& row : h)
        for (double& v : row)
          v = spec.activation == Activation::kRelu ? std::max(v, 0.0) : std::tanh(v);
    }
    p.pre.push_back(std::move(z));
    p.post.push_back(std::move(h));
  }
  return p;
}

std::vector<double> row_softmax(const std::vector<double>& row) {
  const double mx = *std::max_element(row.begin(), row.end());
  std::vector<double> e(row.size());
  double z = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) z += (e[j] = std::exp(row[j] - mx));
  for (double& v : e) v /= z;
  return e;
}

}  // namespace

double loss(const MlpSpec& spec, const ParamVector& params, const Tensor& x,
            const Tensor& y, LossKind kind) {
  const Matrix out = run_forward(spec, params, x).post.back();
  double total = 0.0;
  if (kind == LossKind::kMse) {
    for (std::size_t r = 0; r < out.size(); ++r)
      for (std::size_t c = 0; c < out[r].size(); ++c) {
        const double d = out[r][c] - y[r * out[r].size() + c];
        total += d * d;
      }
    return total / static_cast<double>(out.size() * out[0].size());
  }
  for (std::size_t r = 0; r < out.size(); ++r) {
    const auto p = row_softmax(out[r]);
    total -= std::log(p[static_cast<std::size_t>(y[r])]);
  }
  return total / static_cast<double>(out.size());
}

ParamVector grad(const MlpSpec& spec, const ParamVector& params, const Tensor& x,
                 const Tensor& y, LossKind kind) {
  const Pass p = run_forward(spec, params, x);
  const std::size_t layers = spec.num_layers();
  const std::size_t batch = x.rows();

  Matrix dz = p.post.back();
  if (kind == LossKind::kMse) {
    const double scale = 2.0 / static_cast<double>(batch * dz[0].size());
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t c = 0; c < dz[r].size(); ++c)
        dz[r][c] = scale * (dz[r][c] - y[r * dz[r].size() + c]);
  } else {
    for (std::size_t r = 0; r < batch; ++r) {
      dz[r] = row_softmax(dz[r]);
      dz[r][static_cast<std::size_t>(y[r])] -= 1.0;
      for (double& v : dz[r]) v /= static_cast<double>(batch);
    }
  }

  ParamVector g = params.zeros_like();
  for (std::size_t l = layers; l-- > 0;) {
    const Tensor& w = params[2 * l].value;
    const Matrix& in = p.post[l];
    Tensor& gw = g[2 * l].value;
    Tensor& gb = g[2 * l + 1].value;
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t o = 0; o < w.rows(); ++o) {
        gb[o] += dz[r][o];
        for (std::size_t i = 0; i < w.cols(); ++i) gw.at(o, i) += dz[r][o] * in[r][i];
      }
    }
    if (l == 0) break;
    Matrix dh(batch, std::vector<double>(w.cols(), 0.0));
    for (std::size_t r = 0; r < batch; ++r)
      for (std::size_t o = 0; o < w.rows(); ++o)
        for (std::size_t i = 0; i < w.cols(); ++i) dh[r][i] += dz[r][o] * w.at(o, i);
    const Matrix& z = p.pre[l - 1];
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t i = 0; i < w.cols(); ++i) {
        if (spec.activation == Activation::kRelu) {
          dh[r][i] *= z[r][i] > 0.0 ? 1.0 : 0.0;
        } else {
          const double t = std::tanh(z[r][i]);
          dh[r][i] *= 1.0 - t * t;
        }
      }
    }
    dz = std::move(dh);
  }
  return g;
}

double maml_objective(const MlpSpec& spec, const ParamVector& theta,
                      std::span<const Episode> episodes, double inner_lr,
                      std::size_t steps, LossKind kind) {
  double total = 0.0;
  for (const Episode& ep : episodes) {
    ParamVector adapted = theta;
    for (std::size_t k = 0; k < steps; ++k) {
      adapted = adapted.axpy(-inner_lr, grad(spec, adapted, ep.support_x, ep.support_y, kind));
    }
    total += loss(spec, adapted, ep.query_x, ep.query_y, kind);
  }
  return total / static_cast<double>(episodes.size());
}

}  // namespace umaml::reference
