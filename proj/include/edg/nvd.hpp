#pragma once

// Adapter from the NVD JSON 1.1 vulnerability feed to canonical records.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/catalog.hpp"

namespace edg {

enum class CvssPreference { PreferV3, PreferV2 };

struct NvdImportOptions {
    CvssPreference preference = CvssPreference::PreferV3;
};

struct NvdImportResult {
    std::vector<VulnerabilityRecord> records;
    std::vector<std::string> warnings;  // per-entry, non-fatal
};

// Throws FeedParseError when the document is not an NVD feed. Entries that
// cannot be converted are skipped with a warning.
NvdImportResult import_nvd_feed(const std::filesystem::path& path, const NvdImportOptions& options = {});
NvdImportResult import_nvd_document(const nlohmann::json& doc, const NvdImportOptions& options = {});

}  // namespace edg
