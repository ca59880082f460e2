#include "pipadmm/cli/model_file.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pipadmm/data_io.hpp"
#include "pipadmm/error.hpp"

namespace pipadmm::cli {

void write_model(std::ostream& out, const ModelFile& model) {
  const auto& spec = model.spec;
  out << kModelHeader << '\n';
  out << "solver " << model.solver << '\n';
  out << "loss " << to_string(spec.loss.kind) << '\n';
  out << "loss_param " << format_double(spec.loss.param) << '\n';
  out << "regularizer " << to_string(spec.regularizer) << '\n';
  out << "lambda " << format_double(spec.lambda) << '\n';
  out << "mu " << format_double(spec.mu) << '\n';
  out << "intercept " << (spec.intercept ? 1 : 0) << '\n';
  if (!spec.weights.empty()) {
    out << "weights " << spec.weights.size();
    for (double w : spec.weights) out << ' ' << format_double(w);
    out << '\n';
  }
  if (!spec.groups.empty()) {
    out << "groups " << spec.groups.size() << '\n';
    for (const auto& g : spec.groups) {
      for (std::size_t k = 0; k < g.size(); ++k) out << (k == 0 ? "" : " ") << g[k];
      out << '\n';
    }
  }
  out << "iterations " << model.iterations << '\n';
  out << "converged " << (model.converged ? 1 : 0) << '\n';
  out << "eta " << format_double(model.eta) << '\n';
  out << "coefficients " << model.coefficients.size() << '\n';
  for (double c : model.coefficients) out << format_double(c) << '\n';
}

ModelFile read_model(std::istream& in) {
  ModelFile model;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    return ParseError("model file line " + std::to_string(line_no) + ": " + msg, line_no);
  };
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  auto number = [&](const std::string& token) {
    const auto v = parse_double(token);
    if (!v) throw fail("expected a number, got '" + token + "'");
    return *v;
  };
  auto count = [&](const std::string& token) {
    const double v = number(token);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v))) throw fail("expected a count");
    return static_cast<std::size_t>(v);
  };

  if (!next_line() || line != kModelHeader) throw fail("missing '" + std::string(kModelHeader) + "' header");
  bool have_coefficients = false;
  while (next_line()) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string key, value;
    fields >> key >> value;
    if (value.empty()) throw fail("key '" + key + "' has no value");
    try {
      if (key == "solver") {
        model.solver = value;
      } else if (key == "loss") {
        model.spec.loss.kind = loss_kind_from_string(value);
      } else if (key == "loss_param") {
        model.spec.loss.param = number(value);
      } else if (key == "regularizer") {
        model.spec.regularizer = regularizer_kind_from_string(value);
      } else if (key == "lambda") {
        model.spec.lambda = number(value);
      } else if (key == "mu") {
        model.spec.mu = number(value);
      } else if (key == "intercept") {
        model.spec.intercept = value == "1";
      } else if (key == "weights") {
        const std::size_t k = count(value);
        model.spec.weights.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
          std::string token;
          if (!(fields >> token)) throw fail("too few weights");
          model.spec.weights[i] = number(token);
        }
      } else if (key == "groups") {
        const std::size_t k = count(value);
        model.spec.groups.assign(k, {});
        for (std::size_t g = 0; g < k; ++g) {
          if (!next_line()) throw fail("truncated group list");
          std::istringstream members(line);
          std::string token;
          while (members >> token) model.spec.groups[g].push_back(count(token));
        }
      } else if (key == "iterations") {
        model.iterations = static_cast<int>(count(value));
      } else if (key == "converged") {
        model.converged = value == "1";
      } else if (key == "eta") {
        model.eta = number(value);
      } else if (key == "coefficients") {
        const std::size_t k = count(value);
        model.coefficients.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
          if (!next_line()) throw fail("expected " + std::to_string(k) + " coefficients, got " + std::to_string(i));
          model.coefficients[i] = number(line);
        }
        have_coefficients = true;
      } else {
        throw fail("unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  if (!have_coefficients) throw fail("no coefficient block");
  return model;
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  return read_model(in);
}

void atomic_write(const std::string& path, const std::function<void(std::ostream&)>& body) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    try {
      body(out);
      out.flush();
      if (!out) throw Error("write to '" + tmp.string() + "' failed");
    } catch (...) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw;
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot rename onto '" + path + "'");
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace, bool include_timing) {
  out << "iter,objective,rel_w_change,h_diff_sq,wall_ms\n";
  for (const auto& t : trace) {
    out << t.iter << ',' << format_double(t.objective) << ',' << format_double(t.rel_w_change) << ','
        << format_double(t.h_diff_sq) << ',' << format_double(include_timing ? t.wall_ms : 0.0) << '\n';
  }
}

}  // namespace pipadmm::cli
