#pragma once

#include <string>
#include <string_view>

namespace avcross::io {

// SHA-1 hex digest of a byte string.
std::string sha1_hex(std::string_view data);

// git-style content hash: sha1("blob <size>\0<data>"), matching
// `git hash-object` on the same bytes.
std::string git_blob_sha1(std::string_view data);

}  // namespace avcross::io
