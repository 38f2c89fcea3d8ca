#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cscd/model.hpp"
#include "cscd/numeric.hpp"

namespace cscd {

/// Model description as given on the command line or in a config file.
///   model = ms | partial | dependent | tabular | counterexample
///   theta, eta        change-point prior (eta for partial; dependent fixes eta = 1)
///   mu, sigma         Gaussian shift N(0, sigma^2) -> N(mu, sigma^2)
///   p0, p1            Bernoulli(p0) -> Bernoulli(p1); replaces the Gaussian pair when both are set
///   prior             tabular only: one row of masses P(tau = 0), P(tau = 1), .. per stream
struct ModelSpec {
  std::string model = "ms";
  double theta = 0.05;
  double eta = 1.0;
  double mu = 1.0;
  double sigma = 1.0;
  std::optional<double> p0;
  std::optional<double> p1;
  std::vector<std::string> prior;
};

inline ObservationModel build_observation(const ModelSpec& s) {
  if (s.p0.has_value() != s.p1.has_value()) throw std::invalid_argument("p0 and p1 must be given together");
  if (s.p0) return ObservationModel(BernoulliPair{*s.p0, *s.p1});
  return ObservationModel(GaussianShift{s.mu, s.sigma});
}

inline std::vector<double> parse_prior_row(const std::string& row) {
  std::string text = row;
  for (char& c : text) {
    if (c == ',' || c == ';') c = ' ';
  }
  std::istringstream in(text);
  std::vector<double> masses;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) throw std::invalid_argument("bad prior mass '" + token + "'");
    masses.push_back(v);
  }
  return masses;
}

inline EnsembleModel build_model(const ModelSpec& s) {
  if (s.model == "ms") return EnsembleModel(IidModel{GeometricPrior(s.theta), build_observation(s)});
  if (s.model == "partial") return EnsembleModel(PartialDepModel{GeometricPrior(s.theta), s.eta, build_observation(s)});
  if (s.model == "dependent") return EnsembleModel(PartialDepModel{GeometricPrior(s.theta), 1.0, build_observation(s)});
  if (s.model == "counterexample") return counterexample_model();
  if (s.model == "tabular") {
    if (s.prior.empty()) throw std::invalid_argument("tabular model needs prior rows");
    TabularModel m;
    for (const auto& row : s.prior) m.priors.emplace_back(parse_prior_row(row));
    m.obs = {build_observation(s)};
    return EnsembleModel(std::move(m));
  }
  throw std::invalid_argument("unknown model '" + s.model + "'");
}

/// key=value lines that reproduce the model when read back as a config file.
inline std::vector<std::string> describe(const ModelSpec& s) {
  std::vector<std::string> out{"model=" + s.model};
  if (s.model == "counterexample") return out;
  if (s.model != "tabular") out.push_back("theta=" + to_decimal(s.theta));
  if (s.model == "partial") out.push_back("eta=" + to_decimal(s.eta));
  if (s.p0) {
    out.push_back("p0=" + to_decimal(*s.p0));
    out.push_back("p1=" + to_decimal(*s.p1));
  } else {
    out.push_back("mu=" + to_decimal(s.mu));
    out.push_back("sigma=" + to_decimal(s.sigma));
  }
  for (const auto& row : s.prior) out.push_back("prior=\"" + row + "\"");
  return out;
}

}  // namespace cscd
