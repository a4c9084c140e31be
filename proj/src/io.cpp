#include "cglp/io.hpp"

#include <array>
#include <charconv>

#include "cglp/error.hpp"

namespace cglp::io {

std::string fmt(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error("cannot open output file " + path.string());
    return os;
}

void write_comment_header(std::ostream& os, const std::vector<std::string>& lines) {
    for (const auto& line : lines) os << "# " << line << '\n';
}

}  // namespace cglp::io
