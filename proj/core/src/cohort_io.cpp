#include "medsurv/cohort_io.hpp"
#include "medsurv/error.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace medsurv {

std::string format_double(double v) {
    char buf[40];
    // Shortest representation that parses back to the same double.
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string &s, const std::string &file, std::size_t row,
                    const std::string &col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        std::ostringstream msg;
        msg << file << " row " << row << ": cannot parse '" << s << "' in column '" << col << "'";
        throw DataError(msg.str());
    }
    return v;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty (header row required)");
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_csv_line(line));
    }
    return t;
}

std::size_t column_index(const CsvTable &t, const std::string &name, const std::string &file) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return i;
    throw DataError(file + ": missing column '" + name + "'");
}

} // namespace

Cohort load_cohort(const std::filesystem::path &dir, const CovariateSchema &schema) {
    const auto subjects_path = dir / "subjects.csv";
    const auto landmarks_path = dir / "landmarks.csv";
    CsvTable subjects = read_csv(subjects_path);
    CsvTable landmarks = read_csv(landmarks_path);

    const std::string sfile = "subjects.csv";
    const std::string lfile = "landmarks.csv";

    std::size_t sid_col = column_index(subjects, "subject_id", sfile);
    std::vector<std::size_t> base_cols;
    for (const auto &name : schema.baseline_names)
        base_cols.push_back(column_index(subjects, name, sfile));
    std::size_t tage_col = column_index(subjects, "event_age", sfile);
    std::size_t ind_col = column_index(subjects, "event_indicator", sfile);

    Cohort cohort;
    cohort.schema = schema;
    std::map<std::string, std::size_t> index_of;

    for (std::size_t r = 0; r < subjects.rows.size(); ++r) {
        const auto &row = subjects.rows[r];
        std::size_t csv_row = r + 2; // 1-based, after header
        if (row.size() != subjects.header.size()) {
            std::ostringstream msg;
            msg << sfile << " row " << csv_row << ": expected " << subjects.header.size()
                << " fields, got " << row.size();
            throw DataError(msg.str());
        }
        SubjectRecord rec;
        rec.subject_id = row[sid_col];
        for (std::size_t p = 0; p < base_cols.size(); ++p)
            rec.baseline.push_back(
                parse_double(row[base_cols[p]], sfile, csv_row, schema.baseline_names[p]));
        rec.event_age = parse_double(row[tage_col], sfile, csv_row, "event_age");
        double ind = parse_double(row[ind_col], sfile, csv_row, "event_indicator");
        rec.event_indicator = static_cast<int>(ind);
        if (ind != 0.0 && ind != 1.0)
            throw DataError("subject '" + rec.subject_id + "': event_indicator must be 0 or 1");
        if (index_of.count(rec.subject_id))
            throw DataError("subjects.csv: duplicate subject_id '" + rec.subject_id + "'");
        index_of[rec.subject_id] = cohort.subjects.size();
        cohort.subjects.push_back(std::move(rec));
    }

    std::size_t lid_col = column_index(landmarks, "subject_id", lfile);
    std::size_t age_col = column_index(landmarks, "age", lfile);
    std::size_t z_col = column_index(landmarks, "z", lfile);
    std::size_t l_col = column_index(landmarks, "l", lfile);
    std::size_t m_col = column_index(landmarks, "m", lfile);

    for (std::size_t r = 0; r < landmarks.rows.size(); ++r) {
        const auto &row = landmarks.rows[r];
        std::size_t csv_row = r + 2;
        if (row.size() != landmarks.header.size()) {
            std::ostringstream msg;
            msg << lfile << " row " << csv_row << ": expected " << landmarks.header.size()
                << " fields, got " << row.size();
            throw DataError(msg.str());
        }
        const std::string &sid = row[lid_col];
        auto it = index_of.find(sid);
        if (it == index_of.end()) {
            std::ostringstream msg;
            msg << lfile << " row " << csv_row << ": unknown subject_id '" << sid << "'";
            throw DataError(msg.str());
        }
        Landmark lm;
        lm.age = parse_double(row[age_col], lfile, csv_row, "age");
        double z = parse_double(row[z_col], lfile, csv_row, "z");
        if (z != 0.0 && z != 1.0) {
            std::ostringstream msg;
            msg << lfile << " row " << csv_row << " (subject '" << sid
                << "'): non-binary value in binary column 'z'";
            throw DataError(msg.str());
        }
        lm.z = static_cast<int>(z);
        lm.l = parse_double(row[l_col], lfile, csv_row, "l");
        lm.m = parse_double(row[m_col], lfile, csv_row, "m");
        cohort.subjects[it->second].landmarks.push_back(lm);
    }

    validate_cohort(cohort);
    return cohort;
}

void save_cohort(const Cohort &cohort, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "subjects.csv");
        if (!out) throw DataError("cannot write '" + (dir / "subjects.csv").string() + "'");
        out << "subject_id";
        for (const auto &name : cohort.schema.baseline_names) out << "," << name;
        out << ",event_age,event_indicator\n";
        for (const auto &s : cohort.subjects) {
            out << s.subject_id;
            for (double v : s.baseline) out << "," << format_double(v);
            out << "," << format_double(s.event_age) << "," << s.event_indicator << "\n";
        }
    }
    {
        std::ofstream out(dir / "landmarks.csv");
        if (!out) throw DataError("cannot write '" + (dir / "landmarks.csv").string() + "'");
        out << "subject_id,age,z,l,m\n";
        for (const auto &s : cohort.subjects)
            for (const auto &lm : s.landmarks)
                out << s.subject_id << "," << format_double(lm.age) << "," << lm.z << ","
                    << format_double(lm.l) << "," << format_double(lm.m) << "\n";
    }
}

} // namespace medsurv
