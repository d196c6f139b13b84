#pragma once

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "curvlab/errors.hpp"
#include "curvlab/presentation.hpp"

namespace curvlab {

using json = nlohmann::json;

namespace detail {

template <class S>
json poly_to_json(const Polynomial<S>& p) {
  json terms = json::array();
  for (const auto& [a, c] : p.terms()) terms.push_back({{"exponents", a.values()}, {"coeff", scalar_traits<S>::str(c)}});
  return terms;
}

inline int json_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw InputError(where + ": expected an integer");
  return j.get<int>();
}

}  // namespace detail

template <class S>
json presentation_to_json(const GradedPresentation<S>& P) {
  json gens = json::array();
  for (const auto& g : P.generators) {
    json comps = json::array();
    for (const auto& c : g.components) comps.push_back(detail::poly_to_json(c));
    gens.push_back({{"components", comps}});
  }
  return {{"d", P.spec.d}, {"rank", P.spec.r}, {"shifts", P.spec.shifts}, {"generators", gens}};
}

inline json presentation_to_json(const AnyPresentation& P) {
  return std::visit([](const auto& p) { return presentation_to_json(p); }, P);
}

/// Builds a presentation from the module-spec JSON object. Any decimal coefficient puts the
/// whole presentation on the float path.
inline AnyPresentation presentation_from_json(const json& j) {
  if (!j.is_object()) throw InputError("module spec must be a JSON object");
  for (const char* key : {"d", "rank", "shifts", "generators"})
    if (!j.contains(key)) throw InputError(std::string("module spec is missing \"") + key + "\"");
  FreeModuleSpec spec;
  spec.d = detail::json_int(j["d"], "d");
  spec.r = detail::json_int(j["rank"], "rank");
  if (!j["shifts"].is_array()) throw InputError("shifts: expected an array");
  spec.shifts.clear();
  for (const auto& s : j["shifts"]) spec.shifts.push_back(detail::json_int(s, "shifts"));
  spec.check();
  if (!j["generators"].is_array()) throw InputError("generators: expected an array");

  struct RawTerm {
    ExponentVector e;
    Coefficient c;
  };
  std::vector<std::vector<std::vector<RawTerm>>> raw;
  bool any_float = false;
  for (std::size_t g = 0; g < j["generators"].size(); ++g) {
    const auto& gen = j["generators"][g];
    const std::string where = "generators[" + std::to_string(g) + "]";
    if (!gen.is_object() || !gen.contains("components") || !gen["components"].is_array())
      throw InputError(where + ": expected {\"components\": [...]}");
    if (static_cast<int>(gen["components"].size()) != spec.r)
      throw InputError(where + ": number of components differs from rank");
    auto& comps = raw.emplace_back();
    for (std::size_t c = 0; c < gen["components"].size(); ++c) {
      const auto& terms = gen["components"][c];
      const std::string cw = where + ".components[" + std::to_string(c) + "]";
      if (!terms.is_array()) throw InputError(cw + ": expected a list of terms");
      auto& out = comps.emplace_back();
      for (const auto& t : terms) {
        if (!t.is_object() || !t.contains("exponents") || !t.contains("coeff") || !t["exponents"].is_array() ||
            !t["coeff"].is_string())
          throw InputError(cw + ": term must be {\"exponents\":[...], \"coeff\":\"...\"}");
        std::vector<int> e;
        for (const auto& x : t["exponents"]) e.push_back(detail::json_int(x, cw + ".exponents"));
        if (static_cast<int>(e.size()) != spec.d) throw InputError(cw + ": exponent vector length differs from d");
        Coefficient coeff = parse_coefficient(t["coeff"].get<std::string>());
        any_float = any_float || std::holds_alternative<cplx>(coeff);
        out.push_back({ExponentVector(std::move(e)), std::move(coeff)});
      }
    }
  }

  auto build = [&](auto tag) -> AnyPresentation {
    using S = decltype(tag);
    GradedPresentation<S> P;
    P.spec = spec;
    for (const auto& comps : raw) {
      ModuleVector<S> v;
      for (const auto& terms : comps) {
        Polynomial<S> p(spec.d);
        for (const auto& t : terms) {
          if constexpr (std::is_same_v<S, cplx>)
            p.add_term(t.e, std::visit([](const auto& c) { return scalar_traits<std::decay_t<decltype(c)>>::to_complex(c); }, t.c));
          else
            p.add_term(t.e, std::get<GaussianRational>(t.c));
        }
        v.components.push_back(std::move(p));
      }
      P.generators.push_back(std::move(v));
    }
    return P;
  };
  return any_float ? build(cplx{}) : build(GaussianRational{});
}

/// Parses module-spec text; syntax errors carry the byte offset of the failure.
inline AnyPresentation parse_presentation(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError("spec parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return presentation_from_json(j);
}

inline AnyPresentation load_presentation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open spec file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_presentation(ss.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline int presentation_dim(const AnyPresentation& P) {
  return std::visit([](const auto& p) { return p.spec.d; }, P);
}

}  // namespace curvlab
