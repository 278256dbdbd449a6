// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ihs::csv {

struct Record {
    std::size_t number = 0;  // 1-based, header is record 1
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Record> rows;

    /// Index of a header column, or nullopt when absent.
    std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 style parsing: fields may be double-quoted, quotes inside quoted
/// fields are doubled, and quoted fields may span lines. Accepts LF and CRLF.
/// A leading UTF-8 BOM is stripped. Throws an Ingest error on an unterminated
/// quote or when the input has no header row.
Table parse(std::string_view text, char delimiter);

}  // namespace ihs::csv
