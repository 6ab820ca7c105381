#pragma once

#include <stdlib.h>

#include <filesystem>
#include <string>

#ifndef COLDQS_SOURCE_DIR
#error "COLDQS_SOURCE_DIR must be defined by the build"
#endif

namespace testing {

inline std::filesystem::path source_dir() { return COLDQS_SOURCE_DIR; }

class TempDir {
public:
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "coldqs-test-XXXXXX").string();
        path_ = mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
