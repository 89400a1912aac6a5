#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "afford/data.hpp"
#include "afford/image_io.hpp"
#include "afford/losses.hpp"
#include "afford/metrics.hpp"
#include "afford/splits.hpp"
#include "afford/train.hpp"

namespace py = pybind11;
using namespace afford;

namespace {

DenseMap map_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2D array");
    DenseMap m(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    const double* ptr = arr.data();
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = ptr[i];
    return m;
}

py::array_t<double> map_to_array(const DenseMap& m) {
    py::array_t<double> arr({m.height(), m.width()});
    double* ptr = arr.mutable_data();
    for (std::size_t i = 0; i < m.size(); ++i) ptr[i] = m[i];
    return arr;
}

ImageRGB image_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 3 || arr.shape(2) != 3)
        throw std::invalid_argument("expected an HxWx3 array");
    ImageRGB img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    const float* ptr = arr.data();
    std::copy(ptr, ptr + img.pixels.size(), img.pixels.begin());
    return img;
}

ImageGray gray_from_array(py::array_t<float, py::array::c_style | py::array::forcecast> arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2D array");
    ImageGray img(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)));
    const float* ptr = arr.data();
    std::copy(ptr, ptr + img.pixels.size(), img.pixels.begin());
    return img;
}

py::dict report_to_dict(const metrics::MetricReport& rep) {
    py::dict d;
    d["mean_kld"] = rep.mean_kld;
    d["mean_sim"] = rep.mean_sim;
    d["mean_nss"] = rep.mean_nss;
    d["num_samples"] = rep.num_samples;
    d["num_degenerate"] = rep.num_degenerate;
    py::list per;
    for (const auto& s : rep.per_sample) {
        py::dict e;
        e["sample_id"] = s.sample_id;
        e["kld"] = s.kld;
        e["sim"] = s.sim;
        e["nss"] = s.nss;
        per.append(e);
    }
    d["per_sample"] = per;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "affordance grounding toolkit (C++ core)";

    // dense-map primitives
    m.def("normalize_to_distribution",
          [](py::array_t<double> a) { return map_to_array(normalize_to_distribution(map_from_array(a))); },
          py::arg("map"));
    m.def("minmax_normalize",
          [](py::array_t<double> a) { return map_to_array(minmax_normalize(map_from_array(a))); },
          py::arg("map"));
    m.def("resize_bilinear",
          [](py::array_t<double> a, int h, int w) {
              return map_to_array(resize_bilinear(map_from_array(a), h, w));
          },
          py::arg("map"), py::arg("height"), py::arg("width"));

    // metrics
    m.def("kld",
          [](py::array_t<double> p, py::array_t<double> g, double eps) {
              return metrics::kld(map_from_array(p), map_from_array(g), eps);
          },
          py::arg("pred"), py::arg("gt"), py::arg("eps") = metrics::kDefaultEps);
    m.def("sim",
          [](py::array_t<double> p, py::array_t<double> g) {
              return metrics::sim(map_from_array(p), map_from_array(g));
          },
          py::arg("pred"), py::arg("gt"));
    m.def("nss",
          [](py::array_t<double> p, py::array_t<double> g, bool binarize_gt) {
              return metrics::nss(map_from_array(p), map_from_array(g), binarize_gt);
          },
          py::arg("pred"), py::arg("gt"), py::arg("binarize_gt") = false);
    m.def("evaluate_batch",
          [](const std::vector<std::tuple<py::array_t<double>, py::array_t<double>, std::string>>&
                 triples,
             double eps, bool nss_binarize, int workers) {
              std::vector<metrics::EvalPair> pairs;
              for (const auto& [p, g, id] : triples)
                  pairs.push_back({map_from_array(p), map_from_array(g), id});
              metrics::EvalOptions opts{eps, nss_binarize, workers};
              return report_to_dict(metrics::evaluate_batch(std::move(pairs), opts));
          },
          py::arg("pairs"), py::arg("eps") = metrics::kDefaultEps,
          py::arg("nss_binarize") = false, py::arg("workers") = 1);

    // losses
    py::class_<losses::LossWeights>(m, "LossWeights")
        .def(py::init<>())
        .def_readwrite("alpha_pos", &losses::LossWeights::alpha_pos)
        .def_readwrite("alpha_neg", &losses::LossWeights::alpha_neg)
        .def_readwrite("gamma", &losses::LossWeights::gamma)
        .def_readwrite("lambda_text", &losses::LossWeights::lambda_text)
        .def_readwrite("hard_target", &losses::LossWeights::hard_target)
        .def_readwrite("hard_threshold", &losses::LossWeights::hard_threshold);
    m.def("focal_affordance_loss",
          [](py::array_t<double> p, py::array_t<double> g, const losses::LossWeights& w) {
              return losses::focal_affordance_loss(map_from_array(p), map_from_array(g), w);
          },
          py::arg("pred_prob"), py::arg("gt"), py::arg("weights") = losses::LossWeights{});
    m.def("text_loss", &losses::text_loss, py::arg("logits"), py::arg("targets"),
          py::arg("ignore"));
    m.def("total_loss", &losses::total_loss, py::arg("l_aff"), py::arg("l_text"),
          py::arg("weights") = losses::LossWeights{});

    // splits
    py::class_<splits::SplitSpec>(m, "SplitSpec")
        .def(py::init<>())
        .def_readwrite("name", &splits::SplitSpec::name)
        .def_readwrite("train_classes", &splits::SplitSpec::train_classes)
        .def_readwrite("test_classes", &splits::SplitSpec::test_classes)
        .def("validate", &splits::SplitSpec::validate);
    m.def("load_canonical_splits", [] {
        auto [easy, hard] = splits::load_canonical_splits();
        return py::make_tuple(easy, hard);
    });
    m.def("load_split_file", &splits::load_split_file, py::arg("path"));
    m.def("save_split_file", &splits::save_split_file, py::arg("split"), py::arg("path"));
    m.def("load_embedding_table", [](const std::filesystem::path& p) {
        return splits::load_embedding_table(p);
    });
    py::class_<splits::EmbeddingTable>(m, "EmbeddingTable")
        .def(py::init<>())
        .def_readonly("dim", &splits::EmbeddingTable::dim)
        .def_readonly("source", &splits::EmbeddingTable::source)
        .def("__len__", [](const splits::EmbeddingTable& t) { return t.entries.size(); })
        .def("__contains__", &splits::EmbeddingTable::contains);
    m.def("class_similarity", &splits::class_similarity, py::arg("a"), py::arg("b"),
          py::arg("table"));
    m.def("split_difficulty", &splits::split_difficulty, py::arg("split"), py::arg("table"));
    m.def("build_random_split", &splits::build_random_split, py::arg("classes"),
          py::arg("test_fraction"), py::arg("seed"), py::arg("name") = "random");

    // data
    m.def("build_prompt", [](const std::string& object_name, const std::string& action_name,
                             const std::string& variant) {
        return data::build_prompt(object_name, action_name,
                                  data::prompt_variant_from_string(variant));
    });
    m.def("target_answer_template", &data::target_answer_template);
    m.def("synthetic_archetype_catalog", &data::synthetic_archetype_catalog);
    m.def("generate_synthetic",
          [](int n_samples, int image_size, const std::vector<std::string>& archetypes,
             unsigned long long seed, bool with_depth) {
              data::SyntheticConfig cfg{n_samples, image_size, archetypes, seed, with_depth};
              py::list out;
              for (const auto& s : data::generate_synthetic(cfg)) {
                  py::dict d;
                  d["sample_id"] = s.sample_id;
                  d["object_name"] = s.object_name;
                  d["action_name"] = s.action_name;
                  py::array_t<float> img({s.image.height, s.image.width, 3});
                  std::copy(s.image.pixels.begin(), s.image.pixels.end(), img.mutable_data());
                  d["image"] = img;
                  if (s.depth) {
                      py::array_t<float> dep({s.depth->height, s.depth->width});
                      std::copy(s.depth->pixels.begin(), s.depth->pixels.end(),
                                dep.mutable_data());
                      d["depth"] = dep;
                  }
                  d["gt_map"] = map_to_array(s.gt_map);
                  out.append(d);
              }
              return out;
          },
          py::arg("n_samples") = 8, py::arg("image_size") = 96,
          py::arg("archetypes") = data::synthetic_archetype_catalog(), py::arg("seed") = 7,
          py::arg("with_depth") = true);

    // map I/O
    m.def("save_map_png", [](py::array_t<double> m_, const std::filesystem::path& p) {
        save_map_png(map_from_array(m_), p);
    });
    m.def("load_map_png",
          [](const std::filesystem::path& p) { return map_to_array(load_map_png(p)); });
    m.def("save_map_sidecar", [](py::array_t<double> m_, const std::filesystem::path& p) {
        save_map_sidecar(map_from_array(m_), p);
    });
    m.def("load_map_sidecar",
          [](const std::filesystem::path& p) { return map_to_array(load_map_sidecar(p)); });

    // training + inference
    m.def("train_run",
          [](const std::string& config_json) {
              const auto cfg = train::run_config_from_json(config_json);
              const auto s = train::train_run(cfg, nullptr);
              py::dict d;
              d["step0_total"] = s.step0_total;
              d["final_total"] = s.final_total;
              d["step0_l_aff"] = s.step0_l_aff;
              d["final_l_aff"] = s.final_l_aff;
              d["steps_run"] = s.steps_run;
              d["forced_rate"] = s.forced_rate;
              d["wall_seconds"] = s.wall_seconds;
              d["checkpoint"] = s.checkpoint_path.string();
              d["manifest"] = s.manifest_path.string();
              py::dict reports;
              for (const auto& [name, rep] : s.reports) reports[name.c_str()] = report_to_dict(rep);
              d["reports"] = reports;
              return d;
          },
          py::arg("config_json"));

    py::class_<train::LoadedModel>(m, "Model")
        .def_static("load",
                    [](const std::filesystem::path& p) {
                        auto lm = std::make_unique<train::LoadedModel>(train::load_model(p));
                        return lm;
                    })
        .def_property_readonly("image_size",
                               [](const train::LoadedModel& lm) { return lm.config.image_size; })
        .def_property_readonly("map_size",
                               [](const train::LoadedModel& lm) { return lm.config.map_size; })
        .def_property_readonly("use_depth",
                               [](const train::LoadedModel& lm) { return lm.config.use_depth; })
        .def_property_readonly("trained_steps",
                               [](const train::LoadedModel& lm) { return lm.trained_steps; })
        .def("predict",
             [](const train::LoadedModel& lm, py::array_t<float> image,
                py::object depth, const std::string& object_name,
                const std::string& action_name) {
                 std::optional<ImageGray> dep;
                 if (!depth.is_none()) dep = gray_from_array(py::cast<py::array_t<float>>(depth));
                 const auto p = train::predict_sample(lm, image_from_array(image), dep,
                                                      object_name, action_name, "py");
                 py::dict d;
                 d["map"] = map_to_array(p.map);
                 d["text"] = p.text;
                 d["forced"] = p.forced;
                 return d;
             },
             py::arg("image"), py::arg("depth") = py::none(), py::arg("object_name") = "",
             py::arg("action_name") = "hold");
}
