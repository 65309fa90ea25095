#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "harmonic/analysis.hpp"
#include "harmonic/head.hpp"
#include "harmonic/losses.hpp"
#include "harmonic/model.hpp"
#include "harmonic/runner.hpp"

namespace py = pybind11;
using namespace harmonic;

namespace {

using NumpyArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const NumpyArray& a) {
  Shape shape;
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape.push_back(a.shape(i));
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<double> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

DistanceSpec spec_from_kwargs(const std::string& kind, const std::string& variant, double p,
                              double epsilon, double tau, double ridge) {
  DistanceSpec spec;
  spec.kind = distance_kind_from_string(kind);
  spec.variant = variant;
  if (spec.kind == DistanceKind::mahalanobis && !variant.empty()) {
    spec.cov_mode = cov_mode_from_string(variant);
    spec.variant.clear();
  }
  spec.p = p;
  spec.epsilon = epsilon;
  spec.tau = tau;
  if (ridge > 0.0) spec.ridge = ridge;
  spec.validate();
  return spec;
}

ModelConfig model_config(const std::string& backbone, const std::vector<int64_t>& input_shape,
                         int64_t classes) {
  ModelConfig cfg;
  cfg.backbone = backbone_from_string(backbone);
  cfg.input_shape = input_shape;
  cfg.classes = classes;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_harmonic, m) {
  m.doc() = "Distance-based harmonic classification heads (C++ core)";

  m.def(
      "pairwise_distances",
      [](const NumpyArray& H, const NumpyArray& W, const std::string& kind,
         const std::string& variant, double p, double epsilon, double tau, py::object covariance,
         double ridge) {
        DistanceSpec spec = spec_from_kwargs(kind, variant, p, epsilon, tau, ridge);
        MahalanobisState state;
        MahalanobisState* state_ptr = nullptr;
        if (!covariance.is_none()) {
          state = MahalanobisState::standard_from_covariance(
              tensor_from_array(covariance.cast<NumpyArray>()), ridge);
          state_ptr = &state;
        } else if (spec.kind == DistanceKind::mahalanobis) {
          throw std::invalid_argument("mahalanobis requires a covariance matrix");
        }
        return array_from_tensor(
            pairwise_distances_value(tensor_from_array(H), tensor_from_array(W), spec, state_ptr));
      },
      py::arg("H"), py::arg("W"), py::arg("kind") = "euclidean", py::arg("variant") = "",
      py::arg("p") = 2.0, py::arg("epsilon") = 1e-4, py::arg("tau") = 0.1,
      py::arg("covariance") = py::none(), py::arg("ridge") = 0.0,
      "Batched distances between rows of H [B,d] and prototypes W [C,d].");

  m.def(
      "is_one_homogeneous",
      [](const std::string& kind, const std::string& variant) {
        return is_one_homogeneous(spec_from_kwargs(kind, variant, 2.0, 1e-4, 0.1, 1e-3));
      },
      py::arg("kind"), py::arg("variant") = "");

  m.def(
      "harmonic_log_probs",
      [](const NumpyArray& dists, double n, double epsilon) {
        HarmonicConfig cfg;
        cfg.n = n;
        cfg.epsilon = epsilon;
        return array_from_tensor(harmonic_log_probs_value(tensor_from_array(dists), cfg));
      },
      py::arg("dists"), py::arg("n") = 1.0, py::arg("epsilon") = 1e-4,
      "Row-wise log of p_k = d_k^-n / sum_j d_j^-n.");

  m.def(
      "harmonic_loss",
      [](const NumpyArray& H, const NumpyArray& W, const std::vector<int>& labels,
         const std::string& kind, const std::string& variant, double p, double n, double epsilon,
         double tau) {
        DistanceSpec spec = spec_from_kwargs(kind, variant, p, epsilon, tau, 1e-3);
        HarmonicConfig cfg;
        cfg.n = n;
        cfg.epsilon = epsilon;
        Tape tape;
        Var loss = harmonic_loss(tape.constant(tensor_from_array(H)),
                                 tape.constant(tensor_from_array(W)), labels, spec, cfg);
        return tape.val(loss).data[0];
      },
      py::arg("H"), py::arg("W"), py::arg("labels"), py::arg("kind") = "euclidean",
      py::arg("variant") = "", py::arg("p") = 2.0, py::arg("n") = 1.0, py::arg("epsilon") = 1e-4,
      py::arg("tau") = 0.1);

  m.def(
      "harmonic_loss_grads",
      [](const NumpyArray& H, const NumpyArray& W, const std::vector<int>& labels,
         const std::string& kind, const std::string& variant, double p, double n, double epsilon,
         double tau) {
        DistanceSpec spec = spec_from_kwargs(kind, variant, p, epsilon, tau, 1e-3);
        HarmonicConfig cfg;
        cfg.n = n;
        cfg.epsilon = epsilon;
        Parameter hp("H", tensor_from_array(H));
        Parameter wp("W", tensor_from_array(W));
        Tape tape;
        Var loss = harmonic_loss(tape.leaf(hp), tape.leaf(wp), labels, spec, cfg);
        tape.backward(loss);
        return py::make_tuple(tape.val(loss).data[0], array_from_tensor(hp.grad),
                              array_from_tensor(wp.grad));
      },
      py::arg("H"), py::arg("W"), py::arg("labels"), py::arg("kind") = "euclidean",
      py::arg("variant") = "", py::arg("p") = 2.0, py::arg("n") = 1.0, py::arg("epsilon") = 1e-4,
      py::arg("tau") = 0.1,
      "Returns (loss, dH, dW) for the harmonic loss over prototype distances.");

  m.def(
      "predict",
      [](const NumpyArray& dists) { return predict(tensor_from_array(dists)); }, py::arg("dists"),
      "argmin-distance class per row, ties to the lowest index.");

  m.def(
      "distance_margin",
      [](const NumpyArray& H, const NumpyArray& W, const std::vector<int>& labels,
         const std::string& kind, const std::string& variant, double p, double epsilon) {
        DistanceSpec spec = spec_from_kwargs(kind, variant, p, epsilon, 0.1, 1e-3);
        return distance_margin(tensor_from_array(H), tensor_from_array(W), labels, spec);
      },
      py::arg("H"), py::arg("W"), py::arg("labels"), py::arg("kind") = "euclidean",
      py::arg("variant") = "", py::arg("p") = 2.0, py::arg("epsilon") = 1e-4);

  m.def(
      "cross_entropy",
      [](const NumpyArray& logits, const std::vector<int>& labels) {
        Tape tape;
        return tape.val(cross_entropy(tape.constant(tensor_from_array(logits)), labels)).data[0];
      },
      py::arg("logits"), py::arg("labels"));

  m.def(
      "feature_spectrum",
      [](const NumpyArray& features) {
        return symmetric_eigen(feature_covariance(tensor_from_array(features))).eigenvalues;
      },
      py::arg("features"), "Descending covariance eigenvalues of the feature rows.");

  m.def(
      "effective_rank",
      [](const std::vector<double>& eigenvalues) {
        return effective_rank(spectrum_from_values(eigenvalues));
      },
      py::arg("eigenvalues"));

  m.def(
      "pca_explained",
      [](const std::vector<double>& eigenvalues, int64_t k) {
        return pca_explained(spectrum_from_values(eigenvalues), k);
      },
      py::arg("eigenvalues"), py::arg("k"));

  m.def(
      "pca_dims_for",
      [](const std::vector<double>& eigenvalues, double threshold) {
        return pca_dims_for(spectrum_from_values(eigenvalues), threshold);
      },
      py::arg("eigenvalues"), py::arg("threshold") = 0.9);

  m.def(
      "classification_metrics",
      [](const std::vector<int>& preds, const std::vector<int>& labels, int64_t classes) {
        ClassificationReport r = classification_metrics(preds, labels, classes);
        py::dict out;
        out["accuracy"] = r.accuracy;
        out["macro_f1"] = r.macro_f1;
        out["precision"] = r.precision;
        out["recall"] = r.recall;
        out["f1"] = r.f1;
        return out;
      },
      py::arg("preds"), py::arg("labels"), py::arg("classes"));

  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        WilcoxonResult r = wilcoxon_signed_rank(x, y);
        py::dict out;
        out["w"] = r.w_statistic;
        out["w_plus"] = r.w_plus;
        out["w_minus"] = r.w_minus;
        out["p_value"] = r.p_value;
        out["n"] = r.n;
        out["exact"] = r.exact;
        return out;
      },
      py::arg("x"), py::arg("y"));

  m.def(
      "count_params",
      [](const std::string& backbone, const std::vector<int64_t>& input_shape, int64_t classes) {
        return count_params(model_config(backbone, input_shape, classes));
      },
      py::arg("backbone"), py::arg("input_shape"), py::arg("classes"));

  m.def(
      "count_flops",
      [](const std::string& backbone, const std::vector<int64_t>& input_shape, int64_t classes) {
        FlopReport r = count_flops(model_config(backbone, input_shape, classes));
        py::dict out;
        out["params"] = r.params;
        out["flops"] = r.flops;
        out["gflops"] = r.gflops;
        return out;
      },
      py::arg("backbone"), py::arg("input_shape"), py::arg("classes"));
}
