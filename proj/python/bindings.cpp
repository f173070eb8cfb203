// SPDX-FileCopyrightText: (c) 2026 The sidonforge Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <map>
#include <memory>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>

#include "sidonforge/error.hpp"
#include "sidonforge/pipeline.hpp"

namespace py = pybind11;
namespace sf = sidonforge;

namespace {

// Python exception type per core error name, filled at module init.
std::map<std::string, PyObject*>& error_types() {
    static std::map<std::string, PyObject*> types;
    return types;
}

class BoundPipeline {
public:
    BoundPipeline(const std::string& config_toml, const std::string& base_dir)
        : cfg_(sf::parse_config(config_toml, base_dir)), degrader_(std::make_unique<sf::Degrader>(sf::make_degrader(cfg_))) {}

    py::tuple degrade_array(py::array_t<double, py::array::c_style | py::array::forcecast> samples, int sample_rate_hz,
                            const std::string& utterance_id, int variant_index) const {
        if (samples.ndim() != 1) throw sf::InvalidArgument("samples must be a 1-D array");
        sf::Waveform w{std::vector<double>(samples.data(), samples.data() + samples.size()), sample_rate_hz};
        sf::DegradeResult r;
        {
            py::gil_scoped_release release;
            r = degrader_->degrade(w, utterance_id, variant_index);
        }
        // No base handle: pybind11 copies the samples into a new array.
        py::array_t<double> out(static_cast<py::ssize_t>(r.audio.samples.size()), r.audio.samples.data());
        return py::make_tuple(out, sf::to_json(r.record).dump());
    }

    std::uint64_t global_seed() const { return cfg_.global_seed; }

private:
    sf::PipelineConfig cfg_;
    std::unique_ptr<sf::Degrader> degrader_;
};

}  // namespace

PYBIND11_MODULE(_sidonforge, m) {
    m.doc() = "In-memory degradation pipeline";

    static py::exception<sf::Error> base(m, "SidonforgeError");
    error_types()["Error"] = base.ptr();
    for (const char* name : {"MalformedWav", "UnsupportedEncoding", "IoError", "UnsupportedRate", "RateMismatch",
                             "InvalidArgument", "AbsorptionInfeasible", "InvalidGeometry", "DecayRangeUnavailable",
                             "SilentSignal", "SilentResidual", "EmptyPool", "NoiseDecodeFatal", "BackendUnavailable",
                             "BackendFailure", "AlignmentFailure", "FatalConfig"}) {
        PyObject* type = PyErr_NewException(("sidonforge._sidonforge." + std::string(name)).c_str(), base.ptr(), nullptr);
        m.attr(name) = py::reinterpret_borrow<py::object>(type);  // the map keeps the creation reference
        error_types()[name] = type;
    }
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const sf::Error& e) {
            const auto it = error_types().find(std::string(e.name()));
            PyErr_SetString(it != error_types().end() ? it->second : error_types()["Error"], e.what());
        }
    });

    py::class_<BoundPipeline>(m, "BoundPipeline")
        .def(py::init<const std::string&, const std::string&>(), py::arg("config_toml"), py::arg("base_dir") = "")
        .def("degrade_array", &BoundPipeline::degrade_array, py::arg("samples"), py::arg("sample_rate_hz"),
             py::arg("utterance_id"), py::arg("variant_index"))
        .def_property_readonly("global_seed", &BoundPipeline::global_seed);

    m.def("derive_seed", &sf::derive_seed, py::arg("global_seed"), py::arg("utterance_id"), py::arg("variant_index"));
}
