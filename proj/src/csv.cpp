// SPDX-License-Identifier: Apache-2.0
#include "ihs/csv.hpp"

#include "ihs/error.hpp"

namespace ihs::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

Table parse(std::string_view text, char delimiter) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::vector<Record> records;
    Record current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    std::size_t record_number = 1;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A physically empty line is not a record.
        if (!(current.fields.size() == 1 && current.fields[0].empty())) {
            current.number = record_number++;
            records.push_back(std::move(current));
        }
        current = Record{};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == delimiter) {
            end_field();
        } else if (c == '\n') {
            end_record();
        } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
            // handled by the following '\n'
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) fail(ErrorKind::Ingest, "unterminated quoted field at end of input");
    if (field_started || !field.empty() || !current.fields.empty()) end_record();

    if (records.empty()) fail(ErrorKind::Ingest, "empty file: no header row");
    Table table;
    table.header = std::move(records.front().fields);
    records.erase(records.begin());
    table.rows = std::move(records);
    return table;
}

}  // namespace ihs::csv
