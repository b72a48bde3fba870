#include "sia/certificate_io.h"

#include <fstream>
#include <stdexcept>

namespace sia {

using nlohmann::json;

json BoundsToJson(const Bounds& b) {
  return json{{"d_min", b.d_min},
              {"L", b.L},
              {"V", b.V},
              {"V_l", b.V_l},
              {"u_lo", {b.u_lo.a, b.u_lo.al, b.u_lo.omega}},
              {"u_hi", {b.u_hi.a, b.u_hi.al, b.u_hi.omega}}};
}

Bounds BoundsFromJson(const json& j) {
  Bounds b;
  b.d_min = j.value("d_min", b.d_min);
  b.L = j.value("L", b.L);
  b.V = j.value("V", b.V);
  b.V_l = j.value("V_l", b.V_l);
  if (j.contains("u_lo")) {
    const auto v = j.at("u_lo").get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument("u_lo needs 3 entries");
    b.u_lo = Control{v[0], v[1], v[2]};
  }
  if (j.contains("u_hi")) {
    const auto v = j.at("u_hi").get<std::vector<double>>();
    if (v.size() != 3) throw std::invalid_argument("u_hi needs 3 entries");
    b.u_hi = Control{v[0], v[1], v[2]};
  }
  return b;
}

json ParamsToJson(const VaryingParams& rho) {
  const auto flat = rho.Flatten();
  return json(std::vector<double>(flat.begin(), flat.end()));
}

VaryingParams ParamsFromJson(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 12) {
    throw std::invalid_argument("rho must hold 12 values (9 gains, 3 drifts)");
  }
  std::array<double, 12> flat{};
  std::copy(v.begin(), v.end(), flat.begin());
  return VaryingParams::FromFlat(flat);
}

json CertificateToJson(const CertificateDocument& doc) {
  json multipliers = json::array();
  for (const auto& p : doc.point.multipliers) {
    multipliers.push_back(std::vector<double>(p.data(), p.data() + p.size()));
  }
  return json{{"k", doc.point.k},
              {"multipliers", multipliers},
              {"rho", ParamsToJson(doc.rho)},
              {"bounds", BoundsToJson(doc.bounds)},
              {"tol", doc.tol},
              {"metadata", doc.metadata}};
}

CertificateDocument CertificateFromJson(const json& j) {
  CertificateDocument doc;
  doc.point.k = j.at("k").get<double>();
  const auto& multipliers = j.at("multipliers");
  if (!multipliers.is_array() || multipliers.size() != kNumAssignments) {
    throw std::invalid_argument("multipliers must be an 8 x 13 array");
  }
  for (int i = 0; i < kNumAssignments; ++i) {
    const auto row = multipliers.at(i).get<std::vector<double>>();
    if (row.size() != kNumConstraints) {
      throw std::invalid_argument("multipliers must be an 8 x 13 array");
    }
    for (int n = 0; n < kNumConstraints; ++n) {
      doc.point.multipliers[i](n) = row[n];
    }
  }
  doc.rho = ParamsFromJson(j.at("rho"));
  if (j.contains("bounds")) doc.bounds = BoundsFromJson(j.at("bounds"));
  doc.tol = j.value("tol", kDefaultValidityTol);
  if (j.contains("metadata")) doc.metadata = j.at("metadata");
  return doc;
}

void WriteCertificate(const std::filesystem::path& path,
                      const CertificateDocument& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << CertificateToJson(doc).dump(2) << '\n';
}

CertificateDocument ReadCertificate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return CertificateFromJson(json::parse(in));
}

}  // namespace sia
