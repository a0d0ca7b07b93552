#include "nhse/output.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "nhse/error.hpp"

#ifndef NHSE_VERSION
#define NHSE_VERSION "unknown"
#endif
#ifndef NHSE_GIT_REVISION
#define NHSE_GIT_REVISION ""
#endif

namespace nhse {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

const ResultTable& ExperimentOutput::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name() == name) return t;
  }
  throw InvalidArgument("experiment " + id + " produced no table '" + name + "'");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

std::string code_version() {
  const std::string rev = NHSE_GIT_REVISION;
  return rev.empty() ? std::string(NHSE_VERSION) : std::string(NHSE_VERSION) + "+" + rev;
}

WrittenFiles write_experiment(const ExperimentOutput& output, const ExperimentConfig& config,
                              const std::filesystem::path& outdir, bool with_plots) {
  WrittenFiles written;
  written.directory = outdir / output.id;
  std::filesystem::create_directories(written.directory);

  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& table : output.tables) {
    const std::string name = table.name() + ".csv";
    const std::string csv = table.to_csv();
    write_file(written.directory / name, csv);
    written.files.push_back(name);
    files.push_back({{"path", name},
                     {"rows", table.row_count()},
                     {"bytes", csv.size()},
                     {"sha256", sha256_hex(csv)}});
  }

  if (with_plots && output.plots) {
    // plots are optional output: any failure is recorded, never propagated
    try {
      const auto plots = output.plots();
      std::filesystem::create_directories(written.directory / "plots");
      for (const auto& plot : plots) {
        const std::string name = "plots/" + plot.filename;
        try {
          write_file(written.directory / name, plot.svg);
          written.files.push_back(name);
          files.push_back({{"path", name},
                           {"bytes", plot.svg.size()},
                           {"sha256", sha256_hex(plot.svg)}});
        } catch (const std::exception& ex) {
          written.plot_errors.push_back(name + ": " + ex.what());
        }
      }
    } catch (const std::exception& ex) {
      written.plot_errors.push_back(ex.what());
    }
  }

  nlohmann::ordered_json manifest;
  manifest["experiment"] = output.id;
  manifest["code_version"] = code_version();
  manifest["created_utc"] = utc_timestamp();
  manifest["config"] = config.to_json()["parameters"];
  manifest["files"] = files;
  manifest["reliable"] = output.reliable;
  manifest["unreliable_points"] = output.unreliable_points;
  manifest["summary"] = output.summary;
  manifest["plot_errors"] = written.plot_errors;
  write_file(written.directory / "manifest.json", manifest.dump(2) + "\n");
  written.files.push_back("manifest.json");
  return written;
}

}  // namespace nhse
