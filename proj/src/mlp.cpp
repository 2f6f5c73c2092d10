#include "ecomp/netdyn.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

namespace ecomp {

MlpModel MlpModel::zeros(Eigen::Index n_in, Eigen::Index n_hidden) {
  if (n_in < 1 || n_hidden < 1)
    throw Error("mlp.shape", "network needs at least one input and one hidden unit");
  MlpModel m;
  m.n_in = n_in;
  m.n_hidden = n_hidden;
  m.w1 = Eigen::MatrixXd::Zero(n_hidden, n_in);
  m.b1 = Vector::Zero(n_hidden);
  m.w2 = Vector::Zero(n_hidden);
  m.b2 = 0.0;
  m.input_scaling = ScalingInfo::identity(static_cast<std::size_t>(n_in));
  m.output_scaling = ScalingInfo::identity(1);
  return m;
}

MlpModel MlpModel::random(Eigen::Index n_in, Eigen::Index n_hidden, std::uint64_t seed) {
  MlpModel m = zeros(n_in, n_hidden);
  std::mt19937_64 rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(n_in));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(n_hidden));
  std::uniform_real_distribution<double> u1(-a1, a1);
  std::uniform_real_distribution<double> u2(-a2, a2);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    for (Eigen::Index i = 0; i < n_in; ++i)
      m.w1(h, i) = u1(rng);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    m.b1(h) = u1(rng);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    m.w2(h) = u2(rng);
  m.b2 = u2(rng);
  return m;
}

Vector MlpModel::params() const {
  Vector theta(param_count());
  Eigen::Index k = 0;
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    for (Eigen::Index i = 0; i < n_in; ++i)
      theta(k++) = w1(h, i);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    theta(k++) = b1(h);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    theta(k++) = w2(h);
  theta(k) = b2;
  return theta;
}

void MlpModel::set_params(const Vector &theta) {
  if (theta.size() != param_count())
    throw Error("mlp.shape", fmt::format("expected {} parameters, got {}", param_count(), theta.size()));
  Eigen::Index k = 0;
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    for (Eigen::Index i = 0; i < n_in; ++i)
      w1(h, i) = theta(k++);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    b1(h) = theta(k++);
  for (Eigen::Index h = 0; h < n_hidden; ++h)
    w2(h) = theta(k++);
  b2 = theta(k);
}

void MlpModel::fit_scaling(const Matrix &x, std::span<const double> y) {
  if (x.cols() != n_in)
    throw Error("mlp.shape", "input width does not match the network");
  input_scaling = ScalingInfo::fit(x);
  Matrix ym(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t k = 0; k < y.size(); ++k)
    ym(static_cast<Eigen::Index>(k), 0) = y[k];
  output_scaling = ScalingInfo::fit(ym);
}

void MlpModel::validate() const {
  if (w1.rows() != n_hidden || w1.cols() != n_in || b1.size() != n_hidden || w2.size() != n_hidden ||
      input_scaling.size() != static_cast<std::size_t>(n_in) || output_scaling.size() != 1)
    throw Error("mlp.shape", "inconsistent layer dimensions");
  if (!params().allFinite() || !std::isfinite(b2))
    throw Error("mlp.nonfinite", "network parameters must be finite");
}

double mlp_scaled_eval(const MlpModel &m, const double *xs, double *jac_row, double *d_in) {
  const Eigen::Index nin = m.n_in;
  const Eigen::Index nh = m.n_hidden;
  double out = m.b2;
  if (d_in)
    std::fill(d_in, d_in + nin, 0.0);
  for (Eigen::Index h = 0; h < nh; ++h) {
    double z = m.b1(h);
    for (Eigen::Index i = 0; i < nin; ++i)
      z += m.w1(h, i) * xs[i];
    const double a = std::tanh(z);
    out += m.w2(h) * a;
    const double dz = m.w2(h) * (1.0 - a * a);
    if (jac_row) {
      for (Eigen::Index i = 0; i < nin; ++i)
        jac_row[h * nin + i] = dz * xs[i];
      jac_row[nh * nin + h] = dz;
      jac_row[nh * nin + nh + h] = a;
    }
    if (d_in)
      for (Eigen::Index i = 0; i < nin; ++i)
        d_in[i] += dz * m.w1(h, i);
  }
  if (jac_row)
    jac_row[nh * nin + 2 * nh] = 1.0;
  return out;
}

namespace {

void scale_input(const MlpModel &m, std::span<const double> x, double *xs) {
  if (static_cast<Eigen::Index>(x.size()) != m.n_in)
    throw Error("mlp.shape",
                fmt::format("regressor width {} does not match network input {}", x.size(), m.n_in));
  for (Eigen::Index i = 0; i < m.n_in; ++i)
    xs[i] = m.input_scaling.scale(static_cast<std::size_t>(i), x[static_cast<std::size_t>(i)]);
}

} // namespace

double mlp_forward(const MlpModel &model, std::span<const double> x) {
  std::vector<double> xs(static_cast<std::size_t>(model.n_in));
  scale_input(model, x, xs.data());
  return model.output_scaling.unscale(0, mlp_scaled_eval(model, xs.data()));
}

MlpGradient mlp_jacobian(const MlpModel &model, std::span<const double> x) {
  std::vector<double> xs(static_cast<std::size_t>(model.n_in));
  scale_input(model, x, xs.data());
  MlpGradient g;
  g.d_params.resize(model.param_count());
  g.d_inputs.resize(model.n_in);
  const double ys = mlp_scaled_eval(model, xs.data(), g.d_params.data(), g.d_inputs.data());
  const double out_gain = 1.0 / model.output_scaling.gain(0);
  g.value = model.output_scaling.unscale(0, ys);
  g.d_params *= out_gain;
  for (Eigen::Index i = 0; i < model.n_in; ++i)
    g.d_inputs(i) *= out_gain * model.input_scaling.gain(static_cast<std::size_t>(i));
  return g;
}

Vector mlp_forward_batch(const MlpModel &model, const Matrix &x, Exec exec) {
  if (x.cols() != model.n_in)
    throw Error("mlp.shape", "input width does not match the network");
  Vector out(x.rows());
  auto one = [&](Eigen::Index r) {
    double xs[64];
    std::vector<double> big;
    double *buf = xs;
    if (model.n_in > 64) {
      big.resize(static_cast<std::size_t>(model.n_in));
      buf = big.data();
    }
    for (Eigen::Index i = 0; i < model.n_in; ++i)
      buf[i] = model.input_scaling.scale(static_cast<std::size_t>(i), x(r, i));
    out(r) = model.output_scaling.unscale(0, mlp_scaled_eval(model, buf));
  };
  if (exec == Exec::serial) {
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      one(r);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      one(r);
  }
  return out;
}

} // namespace ecomp
