#pragma once

#include <filesystem>

#include "json.hpp"
#include "sia/dynamics.h"
#include "sia/sos_certificate.h"

namespace sia {

/// On-disk certificate: the point, the dynamics it certifies, and the bounds
/// and tolerance it was checked against.
struct CertificateDocument {
  CertificatePoint point;
  VaryingParams rho;
  Bounds bounds;
  double tol{kDefaultValidityTol};
  nlohmann::json metadata = nlohmann::json::object();
};

nlohmann::json BoundsToJson(const Bounds& b);
Bounds BoundsFromJson(const nlohmann::json& j);

/// 12 values, flattened as VaryingParams::Flatten.
nlohmann::json ParamsToJson(const VaryingParams& rho);
VaryingParams ParamsFromJson(const nlohmann::json& j);

nlohmann::json CertificateToJson(const CertificateDocument& doc);
CertificateDocument CertificateFromJson(const nlohmann::json& j);

void WriteCertificate(const std::filesystem::path& path,
                      const CertificateDocument& doc);
CertificateDocument ReadCertificate(const std::filesystem::path& path);

}  // namespace sia
