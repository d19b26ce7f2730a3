#include "coha/atomic_file.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "coha/error.hpp"

namespace coha {

namespace fs = std::filesystem;

namespace {

class Fd {
 public:
  explicit Fd(int fd) : fd_(fd) {}
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  int get() const { return fd_; }

 private:
  int fd_;
};

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw Error(ErrorCode::io, what + " '" + path.string() + "': " + std::strerror(errno));
}

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      io_fail("write failed for", path);
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void fsync_dir(const fs::path& dir) {
  Fd fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY));
  if (fd.get() >= 0) ::fsync(fd.get());
}

std::atomic<unsigned> temp_counter{0};

}  // namespace

void atomic_write_file(const fs::path& target, std::string_view content, const FaultHook& hook) {
  auto notify = [&](WriteStage stage) {
    if (hook) hook(stage, target);
  };

  fs::path dir = target.parent_path();
  if (dir.empty()) dir = ".";
  fs::path temp = target;
  temp += "." + std::to_string(::getpid()) + "-" + std::to_string(temp_counter++) +
          std::string(kTempSuffix);

  {
    Fd fd(::open(temp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
    if (fd.get() < 0) io_fail("cannot create", temp);
    notify(WriteStage::temp_created);
    const std::size_t half = content.size() / 2;
    write_all(fd.get(), content.substr(0, half), temp);
    notify(WriteStage::temp_partial);
    write_all(fd.get(), content.substr(half), temp);
    notify(WriteStage::temp_written);
    if (::fsync(fd.get()) != 0) io_fail("fsync failed for", temp);
  }
  notify(WriteStage::temp_synced);
  if (::rename(temp.c_str(), target.c_str()) != 0) io_fail("rename failed for", target);
  notify(WriteStage::renamed);
  fsync_dir(dir);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace coha
