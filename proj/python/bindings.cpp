#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "glrc/checkpoint.hpp"
#include "glrc/cli.hpp"
#include "glrc/distill.hpp"
#include "glrc/error.hpp"
#include "glrc/eval.hpp"
#include "glrc/synthetic.hpp"
#include "glrc/teacher.hpp"

namespace py = pybind11;
using namespace glrc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Edges = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

DenseMatrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw InvalidShape("expected a 2-d array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return DenseMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Array to_array(const DenseMatrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

InteractionSet to_set(std::uint32_t users, std::uint32_t items, const Edges& edges) {
  std::vector<Interaction> e;
  e.reserve(edges.size());
  for (const auto& [u, i] : edges) e.push_back({u, i});
  return InteractionSet(users, items, std::move(e));
}

Edges to_edges(std::span<const Interaction> edges) {
  Edges out;
  for (const auto& e : edges) out.emplace_back(e.user, e.item);
  return out;
}

// Runs a CLI command, turning a non-zero exit into a Python exception.
template <class Fn>
std::string run_command(Fn&& fn) {
  std::ostringstream out, err;
  const int code = fn(out, err);
  if (code != cli::kOk) {
    const std::string msg = err.str();
    if (code == cli::kConfigError) throw ConfigError(msg);
    if (code == cli::kDataError) throw DataError(msg);
    throw NumericError(msg);
  }
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_glrc, m) {
  m.doc() = "Graph-less collaborative filtering core";

  auto base = py::register_exception<Error>(m, "GlrcError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<InvalidShape>(m, "InvalidShape", base.ptr());
  py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
  py::register_exception<DegenerateVector>(m, "DegenerateVector", base.ptr());
  py::register_exception<ContractViolation>(m, "ContractViolation", base.ptr());

  m.def("blocks_dataset", [](std::uint64_t seed) {
    Rng rng = Rng(seed).split(streams::synthetic);
    return to_edges(blocks_dataset(BlocksSpec{}, rng).edges);
  }, py::arg("seed") = 1, "Edges (user, item) of the 4-community synthetic dataset.");

  m.def("normalized_adjacency", [](std::uint32_t users, std::uint32_t items, const Edges& edges) {
    return to_array(normalize_adjacency(to_set(users, items, edges)).to_dense());
  }, py::arg("users"), py::arg("items"), py::arg("edges"));

  m.def("teacher_readout", [](std::uint32_t users, std::uint32_t items, const Edges& edges, const Array& h,
                              std::uint32_t layers, bool average) {
    const auto emb = to_matrix(h);
    TeacherModel t(to_set(users, items, edges), TeacherConfig{static_cast<std::uint32_t>(emb.cols()), layers, average}, emb);
    t.propagate();
    return to_array(t.readout());
  }, py::arg("users"), py::arg("items"), py::arg("edges"), py::arg("embeddings"), py::arg("layers") = 2,
        py::arg("average") = false);

  m.def("student_forward", [](const Array& h, const std::vector<Array>& weights, double slope) {
    auto emb = to_matrix(h);
    std::vector<DenseMatrix> w;
    for (const auto& a : weights) w.push_back(to_matrix(a));
    const StudentConfig cfg{static_cast<std::uint32_t>(emb.cols()), static_cast<std::uint32_t>(w.size()), slope};
    // Layout only matters for ranking; put every row on the user side.
    const NodeLayout layout{static_cast<std::uint32_t>(emb.rows()), 0};
    StudentModel s(layout, cfg, std::move(emb), std::move(w));
    return to_array(student_embed_all(s));
  }, py::arg("embeddings"), py::arg("weights"), py::arg("leaky_slope") = 0.01);

  m.def("pred_kd", [](const std::vector<double>& zs, const std::vector<double>& zt, double tau) {
    const auto r = pred_kd(zs, zt, tau);
    return py::make_tuple(r.loss, r.grad);
  }, py::arg("z_student"), py::arg("z_teacher"), py::arg("tau1") = 1.0, "(loss, d loss / d z_student)");

  m.def("omega_weights", [](const Array& g1, const Array& g2, const Array& grec, double eps) {
    const auto p = to_matrix(g1);
    std::vector<std::uint32_t> nodes(p.rows());
    for (std::uint32_t k = 0; k < nodes.size(); ++k) nodes[k] = k;
    return omega_weights(BatchGradients::gather(nodes, p, to_matrix(g2), to_matrix(grec)), eps);
  }, py::arg("pred_grad"), py::arg("embed_grad"), py::arg("rec_grad"), py::arg("epsilon") = 0.2);

  m.def("rank_metrics", [](const Array& emb, std::uint32_t users, std::uint32_t items, const Edges& mask,
                           const Edges& truth, std::uint32_t n) {
    const auto e = to_matrix(emb);
    const auto masked = to_set(users, items, mask);
    const auto t = to_set(users, items, truth);
    const InteractionSet* masks[] = {&masked};
    const auto ranking = rank_all(e, NodeLayout{users, items}, masks, t, n);
    py::dict d;
    d["recall"] = recall_at_n(ranking, t);
    d["ndcg"] = ndcg_at_n(ranking, t);
    d["users"] = ranking.lists.size();
    return d;
  }, py::arg("embeddings"), py::arg("users"), py::arg("items"), py::arg("mask"), py::arg("truth"), py::arg("n") = 20);

  m.def("mad", [](const Array& emb, const std::vector<std::uint32_t>& rows) { return mad(to_matrix(emb), rows); },
        py::arg("embeddings"), py::arg("rows"));

  m.def("read_checkpoint", [](const std::filesystem::path& path) {
    const auto c = read_checkpoint(path);
    py::dict d;
    d["kind"] = c.header.kind == ModelKind::teacher ? "teacher" : "student";
    d["users"] = c.header.users;
    d["items"] = c.header.items;
    d["dim"] = c.header.dim;
    d["layers"] = c.header.layers;
    d["leaky_slope"] = c.header.leaky_slope;
    d["average_layers"] = (c.header.flags & 1u) != 0;
    py::list tensors;
    for (const auto& t : c.tensors) tensors.append(to_array(t));
    d["tensors"] = tensors;
    return d;
  }, py::arg("path"));

  m.def("make_synthetic", [](const std::filesystem::path& out, std::uint64_t seed) {
    return run_command([&](auto& o, auto& e) { return cli::cmd_make_synthetic(out, seed, o, e); });
  }, py::arg("out"), py::arg("seed") = 1);

  m.def("train_teacher", [](const std::filesystem::path& config) {
    return run_command([&](auto& o, auto& e) { return cli::cmd_train_teacher(config, o, e); });
  }, py::arg("config"));

  m.def("distill", [](const std::filesystem::path& config, const std::filesystem::path& teacher, bool no_l1,
                      bool no_l2, bool no_l3) {
    cli::DistillOptions opt{config, teacher, {no_l1, no_l2, no_l3}};
    return run_command([&](auto& o, auto& e) { return cli::cmd_distill(opt, o, e); });
  }, py::arg("config"), py::arg("teacher") = std::filesystem::path{}, py::arg("disable_l1") = false,
        py::arg("disable_l2") = false, py::arg("disable_l3") = false);

  m.def("evaluate_json", [](const std::filesystem::path& model, const std::filesystem::path& data, std::uint32_t n,
                            bool with_mad, const std::string& split) {
    cli::EvaluateOptions opt;
    opt.model = model;
    opt.data = data;
    opt.n = n;
    opt.mad = with_mad;
    opt.split = split;
    return run_command([&](auto& o, auto& e) { return cli::cmd_evaluate(opt, o, e); });
  }, py::arg("model"), py::arg("data"), py::arg("n") = 20, py::arg("mad") = false, py::arg("split") = "test");
}
