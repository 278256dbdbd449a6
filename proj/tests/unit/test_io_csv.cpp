// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "ihs/csv.hpp"
#include "ihs/error.hpp"
#include "ihs/io.hpp"
#include "support.hpp"

namespace support = ihs::testing;

using namespace ihs;

TEST(Io, Sha256KnownVector) {
    EXPECT_EQ(to_hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(to_hex(sha256("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, HexRoundtripAndRejects) {
    const auto d = sha256("round them up");
    EXPECT_EQ(digest_from_hex(to_hex(d)), d);
    EXPECT_THROW(digest_from_hex("abc"), Error);
    EXPECT_THROW(digest_from_hex(std::string(64, 'z')), Error);
}

TEST(Io, AtomicWriteLeavesNoTemporary) {
    const auto dir = support::scratch_dir("io-atomic");
    write_file_atomic(dir / "a.txt", "hello");
    EXPECT_EQ(read_file(dir / "a.txt"), "hello");
    write_file_atomic(dir / "a.txt", "again");
    EXPECT_EQ(read_file(dir / "a.txt"), "again");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir)) ++entries;
    EXPECT_EQ(entries, 1u);
}

TEST(Io, MissingFileNamesPath) {
    try {
        read_file("/nonexistent/dir/file.bin");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Io);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/file.bin"), std::string::npos);
    }
}

TEST(Io, WriteIntoMissingDirectoryFails) {
    EXPECT_THROW(write_file_atomic("/nonexistent/dir/out.txt", "x"), Error);
}

TEST(Csv, QuotedMultilineAndCrlf) {
    const auto t = csv::parse("\xEF\xBB\xBFid,text\r\n1,\"a, \"\"quoted\"\"\nline\"\r\n\r\n2,plain\r\n", ',');
    ASSERT_EQ(t.header, (std::vector<std::string>{"id", "text"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].fields[1], "a, \"quoted\"\nline");
    EXPECT_EQ(t.rows[0].number, 2u);
    EXPECT_EQ(t.rows[1].fields[1], "plain");
    EXPECT_EQ(t.column("text"), 1u);
    EXPECT_FALSE(t.column("missing").has_value());
}

TEST(Csv, TabDelimited) {
    const auto t = csv::parse("a\tb\nx,y\tz\n", '\t');
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0].fields[0], "x,y");
}

TEST(Csv, Errors) {
    EXPECT_THROW(csv::parse("", ','), Error);
    EXPECT_THROW(csv::parse("a,b\n\"open,1\n", ','), Error);
}
