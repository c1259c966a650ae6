#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "labclean/schema.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        std::mt19937_64 g(rd());
        path_ = fs::temp_directory_path() / ("labclean_test_" + std::to_string(g()));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline labclean::Date ymd(int y, unsigned m, unsigned d) {
    return labclean::Date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
}

inline labclean::TestRecord make_test(std::string analyte, std::string result,
                                      std::optional<std::string> reference = std::nullopt,
                                      std::string patient = "P1", labclean::Date date = ymd(2020, 4, 1),
                                      std::string exam = "Exame") {
    return labclean::TestRecord::create(std::move(patient), date, "HOSP", std::move(exam), std::move(analyte),
                                        std::move(result), std::nullopt, std::move(reference));
}

inline const char* kTestsHeader =
    "ID_PACIENTE|DT_COLETA|DE_ORIGEM|DE_EXAME|DE_ANALITO|DE_RESULTADO|CD_UNIDADE|DE_VALOR_REFERENCIA\n";

}  // namespace testsupport
