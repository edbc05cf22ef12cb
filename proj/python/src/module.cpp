#include <optional>
#include <string>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dualwave/config.hpp"
#include "dualwave/emit.hpp"
#include "dualwave/experiments.hpp"

namespace py = pybind11;
using namespace dualwave;

namespace {

SimConfig with_seed(const std::string& text, std::optional<std::uint64_t> seed) {
  SimConfig c = parse_config(text);
  if (seed) c.seed = *seed;
  return c;
}

PyObject* config_error_type = nullptr;

py::dict files_dict(const Bundle& b) {
  py::dict out;
  for (const auto& [path, content] : b.files()) out[py::str(path)] = py::bytes(content);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic pilot-wave simulator core";

  config_error_type = (new py::exception<ConfigError>(m, "ConfigError", PyExc_ValueError))->ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::object err = py::handle(config_error_type)(e.what());
      err.attr("errors") = py::cast(e.errors());
      PyErr_SetObject(config_error_type, err.ptr());
    }
  });
  py::register_exception<ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("version", &version);
  m.def("sha256_hex", [](py::bytes data) { return sha256_hex(std::string(data)); });
  m.def("format_number", &format_number);

  m.def("canonical_config", [](const std::string& text) { return emit_config(parse_config(text)); },
        py::arg("text"), "Parse and validate a configuration, returning its canonical JSON.");
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("text"));

  m.def(
      "run",
      [](const std::string& command, const std::string& text, std::optional<std::uint64_t> seed,
         std::size_t threads) {
        const SimConfig c = with_seed(text, seed);
        CommandResult r;
        {
          py::gil_scoped_release release;
          r = run_command(command, c, threads);
        }
        py::dict manifest;
        for (const ManifestEntry& e : r.bundle.manifest()) manifest[py::str(e.path)] = e.sha256;
        py::dict out;
        out["pass"] = r.pass;
        out["line"] = r.line;
        out["files"] = files_dict(r.bundle);
        out["manifest"] = manifest;
        return out;
      },
      py::arg("command"), py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = 1,
      "Run a subcommand on a configuration text and return its output bundle in memory.");

  m.def(
      "write",
      [](const std::string& command, const std::string& text, const std::string& out,
         std::optional<std::uint64_t> seed, std::size_t threads) {
        const SimConfig c = with_seed(text, seed);
        py::gil_scoped_release release;
        const CommandResult r = run_command(command, c, threads);
        r.bundle.write(out);
        return r.pass;
      },
      py::arg("command"), py::arg("config"), py::arg("out"), py::arg("seed") = py::none(), py::arg("threads") = 1);

  m.def("physical_arithmetic", [] {
    py::list rows;
    for (const ArithmeticRow& r : physical_arithmetic()) {
      py::dict d;
      d["name"] = r.name;
      d["value"] = r.value;
      d["expected"] = r.expected;
      d["pass"] = r.pass;
      rows.append(d);
    }
    return rows;
  });
}
