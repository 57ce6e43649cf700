#include "lcpo/tensor/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace lcpo {
namespace {

std::vector<int> layer_dims(const MlpSpec& spec) {
  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(spec.output_dim);
  return dims;
}

Matrix2D softmax_rows(const Matrix2D& logits) {
  Matrix2D out = logits;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double m = out.row(i).maxCoeff();
    out.row(i) = (out.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

}  // namespace

void MlpSpec::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("MlpSpec: input_dim must be positive");
  if (output_dim <= 0) throw std::invalid_argument("MlpSpec: output_dim must be positive");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("MlpSpec: hidden widths must be positive");
  }
}

int MlpSpec::param_count() const {
  const auto dims = layer_dims(*this);
  int count = 0;
  for (size_t l = 0; l + 1 < dims.size(); ++l) count += dims[l] * dims[l + 1] + dims[l + 1];
  return count;
}

Mlp::Mlp(MlpSpec spec, Rng& init_rng) : spec_(std::move(spec)) {
  spec_.validate();
  const auto dims = layer_dims(spec_);
  const int layers = spec_.layer_count();
  weights_.resize(layers);
  biases_.resize(layers);
  for (int l = 0; l < layers; ++l) {
    weights_[l].resize(dims[l], dims[l + 1]);
    biases_[l].setZero(dims[l + 1]);
    // Kaiming-uniform fan-in for ReLU layers; the head stays near zero so
    // softmax actors start close to uniform.
    const double bound = (l + 1 < layers) ? std::sqrt(6.0 / dims[l]) : 1e-3;
    for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
      for (Eigen::Index j = 0; j < weights_[l].cols(); ++j)
        weights_[l](i, j) = init_rng.uniform(-bound, bound);
  }
}

Matrix2D Mlp::forward(const Matrix2D& batch) {
  forward_logits(batch);
  return cache_.output;
}

Matrix2D Mlp::forward_logits(const Matrix2D& batch) {
  if (batch.cols() != spec_.input_dim) throw std::invalid_argument("Mlp: batch width != input_dim");
  const int layers = spec_.layer_count();
  cache_.input = batch;
  cache_.post.assign(layers - 1, Matrix2D());
  Matrix2D z = batch;
  for (int l = 0; l + 1 < layers; ++l) {
    z = ((z * weights_[l]).rowwise() + biases_[l]).cwiseMax(0.0);
    cache_.post[l] = z;
  }
  cache_.logits = (z * weights_[layers - 1]).rowwise() + biases_[layers - 1];
  cache_.output = spec_.output_activation == OutputActivation::Softmax ? softmax_rows(cache_.logits)
                                                                       : cache_.logits;
  cache_.valid = true;
  cache_.params_version = params_version_;
  return cache_.logits;
}

void Mlp::check_cache(const Matrix2D& batch) const {
  if (!cache_.valid || cache_.params_version != params_version_ ||
      cache_.input.rows() != batch.rows() || cache_.input.cols() != batch.cols() ||
      cache_.input != batch) {
    throw std::logic_error("Mlp: backward/tangent without a matching forward");
  }
}

ParamVector Mlp::backward(const Matrix2D& batch, const Matrix2D& upstream) const {
  if (spec_.output_activation == OutputActivation::Identity)
    return backward_from_logits(batch, upstream);
  check_cache(batch);
  // Chain through the softmax Jacobian: dL/dz_i = p_i (u_i - sum_j u_j p_j).
  const Matrix2D& p = cache_.output;
  Matrix2D up_logits = p.cwiseProduct(upstream);
  const Eigen::VectorXd dot = up_logits.rowwise().sum();
  up_logits -= p.cwiseProduct(dot.replicate(1, p.cols()));
  return backward_from_logits(batch, up_logits);
}

ParamVector Mlp::backward_from_logits(const Matrix2D& batch, const Matrix2D& upstream) const {
  check_cache(batch);
  if (upstream.rows() != batch.rows() || upstream.cols() != spec_.output_dim)
    throw std::invalid_argument("Mlp: upstream shape mismatch");
  const int layers = spec_.layer_count();
  ParamVector grad(param_count());
  int tail = static_cast<int>(grad.size());
  Matrix2D delta = upstream;
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix2D& in = (l == 0) ? cache_.input : cache_.post[l - 1];
    const Matrix2D gw = in.transpose() * delta;
    const Eigen::RowVectorXd gb = delta.colwise().sum();
    tail -= static_cast<int>(gw.size()) + static_cast<int>(gb.size());
    Eigen::Map<ParamVector>(grad.data() + tail, gw.size()) =
        Eigen::Map<const ParamVector>(gw.data(), gw.size());
    Eigen::Map<Eigen::RowVectorXd>(grad.data() + tail + gw.size(), gb.size()) = gb;
    if (l > 0) {
      delta = (delta * weights_[l].transpose())
                  .cwiseProduct((cache_.post[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return grad;
}

Matrix2D Mlp::tangent_logits(const Matrix2D& batch, const ParamVector& v) const {
  check_cache(batch);
  if (v.size() != param_count()) throw std::invalid_argument("Mlp: tangent size mismatch");
  const int layers = spec_.layer_count();
  Matrix2D dz = Matrix2D::Zero(batch.rows(), batch.cols());
  int offset = 0;
  for (int l = 0; l < layers; ++l) {
    const Matrix2D& in = (l == 0) ? cache_.input : cache_.post[l - 1];
    Eigen::Map<const Matrix2D> dw(v.data() + offset, weights_[l].rows(), weights_[l].cols());
    offset += static_cast<int>(weights_[l].size());
    Eigen::Map<const Eigen::RowVectorXd> db(v.data() + offset, biases_[l].size());
    offset += static_cast<int>(biases_[l].size());
    Matrix2D dpre = ((dz * weights_[l] + in * dw).rowwise() + db);
    if (l + 1 < layers) {
      dz = dpre.cwiseProduct((cache_.post[l].array() > 0.0).cast<double>().matrix());
    } else {
      dz = std::move(dpre);
    }
  }
  return dz;
}

ParamVector Mlp::get_params() const {
  ParamVector params(param_count());
  int offset = 0;
  const int layers = spec_.layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::Map<ParamVector>(params.data() + offset, weights_[l].size()) =
        Eigen::Map<const ParamVector>(weights_[l].data(), weights_[l].size());
    offset += static_cast<int>(weights_[l].size());
    Eigen::Map<Eigen::RowVectorXd>(params.data() + offset, biases_[l].size()) = biases_[l];
    offset += static_cast<int>(biases_[l].size());
  }
  return params;
}

void Mlp::set_params(const ParamVector& params) {
  if (params.size() != param_count()) throw std::invalid_argument("Mlp: param size mismatch");
  int offset = 0;
  const int layers = spec_.layer_count();
  for (int l = 0; l < layers; ++l) {
    Eigen::Map<const Matrix2D> w(params.data() + offset, weights_[l].rows(), weights_[l].cols());
    weights_[l] = w;
    offset += static_cast<int>(weights_[l].size());
    biases_[l] = Eigen::Map<const Eigen::RowVectorXd>(params.data() + offset, biases_[l].size());
    offset += static_cast<int>(biases_[l].size());
  }
  ++params_version_;
  cache_.valid = false;
}

ParamVector gradient_vector_product(Mlp& net, const Matrix2D& batch,
                                    const LogitScalarFn& scalar_fn, const ParamVector& v) {
  const Matrix2D logits = net.forward_logits(batch);
  const Matrix2D tangent = net.tangent_logits(batch, v);
  const Matrix2D curved = scalar_fn.hess_action(logits, tangent);
  return net.backward_from_logits(batch, curved);
}

}  // namespace lcpo
