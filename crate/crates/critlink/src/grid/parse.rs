//! Plain-text case format.
//!
//! A case file is UTF-8 text: a `base_mva = <value>` assignment followed by
//! three CSV sections headed `[BUS]`, `[BRANCH]` and `[GEN]`. Each section
//! starts with its fixed header row. `#` starts a comment, blank lines are
//! ignored. Every malformed input is reported with its line number.

use super::{Branch, BranchId, Bus, BusId, BusKind, GridCase, GridError};
use thiserror::Error;

pub(crate) const BUS_HEADER: &str = "id,kind,p_load,q_load,v_setpoint";
pub(crate) const BRANCH_HEADER: &str = "id,from,to,r,x,b_shunt,rating";
pub(crate) const GEN_HEADER: &str = "bus_id,p_gen,q_gen";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Row { line: usize, message: String },
    #[error("missing section [{0}]")]
    MissingSection(&'static str),
    #[error("missing base_mva declaration")]
    MissingBase,
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn row_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Row { line, message: message.into() }
}

fn parse_f64(field: &str, name: &str, line: usize) -> Result<f64, ParseError> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| row_err(line, format!("invalid {name} value {field:?}")))
}

fn parse_usize(field: &str, name: &str, line: usize) -> Result<usize, ParseError> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| row_err(line, format!("invalid {name} value {field:?}")))
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Bus,
    Branch,
    Gen,
}

pub(crate) fn parse_case(text: &str) -> Result<GridCase, ParseError> {
    let mut base_mva = None;
    let mut section = Section::None;
    let mut header_seen = false;
    let mut buses: Vec<Bus> = Vec::new();
    let mut branches: Vec<Branch> = Vec::new();
    let mut gens: Vec<(usize, BusId, f64, f64)> = Vec::new();
    let mut sections_seen = [false; 3];

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }

        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| row_err(line, "unterminated section header"))?;
            section = match name {
                "BUS" => {
                    sections_seen[0] = true;
                    Section::Bus
                }
                "BRANCH" => {
                    sections_seen[1] = true;
                    Section::Branch
                }
                "GEN" => {
                    sections_seen[2] = true;
                    Section::Gen
                }
                other => return Err(row_err(line, format!("unknown section [{other}]"))),
            };
            header_seen = false;
            continue;
        }

        if section == Section::None {
            if let Some((key, value)) = content.split_once('=') {
                if key.trim() == "base_mva" {
                    base_mva = Some(parse_f64(value, "base_mva", line)?);
                    continue;
                }
            }
            return Err(row_err(line, format!("unexpected content before sections: {content:?}")));
        }

        if !header_seen {
            let expected = match section {
                Section::Bus => BUS_HEADER,
                Section::Branch => BRANCH_HEADER,
                Section::Gen => GEN_HEADER,
                Section::None => unreachable!(),
            };
            let squashed: String = content.split(',').map(str::trim).collect::<Vec<_>>().join(",");
            if squashed != expected {
                return Err(row_err(line, format!("expected header {expected:?}, got {content:?}")));
            }
            header_seen = true;
            continue;
        }

        let fields: Vec<&str> = content.split(',').collect();
        match section {
            Section::Bus => {
                if fields.len() != 5 {
                    return Err(row_err(line, format!("expected 5 bus fields, got {}", fields.len())));
                }
                let kind = match fields[1].trim() {
                    "slack" => BusKind::Slack,
                    "pv" => BusKind::Pv,
                    "pq" => BusKind::Pq,
                    other => return Err(row_err(line, format!("unknown bus kind {other:?}"))),
                };
                buses.push(Bus {
                    id: BusId(parse_usize(fields[0], "bus id", line)?),
                    kind,
                    p_gen: 0.0,
                    q_gen: 0.0,
                    p_load: parse_f64(fields[2], "p_load", line)?,
                    q_load: parse_f64(fields[3], "q_load", line)?,
                    v_setpoint: parse_f64(fields[4], "v_setpoint", line)?,
                });
            }
            Section::Branch => {
                if fields.len() != 7 {
                    return Err(row_err(
                        line,
                        format!("expected 7 branch fields, got {}", fields.len()),
                    ));
                }
                branches.push(Branch {
                    id: BranchId(parse_usize(fields[0], "branch id", line)?),
                    from: BusId(parse_usize(fields[1], "from bus", line)?),
                    to: BusId(parse_usize(fields[2], "to bus", line)?),
                    r: parse_f64(fields[3], "r", line)?,
                    x: parse_f64(fields[4], "x", line)?,
                    b_shunt: parse_f64(fields[5], "b_shunt", line)?,
                    rating: parse_f64(fields[6], "rating", line)?,
                });
            }
            Section::Gen => {
                if fields.len() != 3 {
                    return Err(row_err(line, format!("expected 3 gen fields, got {}", fields.len())));
                }
                gens.push((
                    line,
                    BusId(parse_usize(fields[0], "gen bus id", line)?),
                    parse_f64(fields[1], "p_gen", line)?,
                    parse_f64(fields[2], "q_gen", line)?,
                ));
            }
            Section::None => unreachable!(),
        }
    }

    for (name, seen) in [("BUS", sections_seen[0]), ("BRANCH", sections_seen[1]), ("GEN", sections_seen[2])]
    {
        if !seen {
            return Err(ParseError::MissingSection(match name {
                "BUS" => "BUS",
                "BRANCH" => "BRANCH",
                _ => "GEN",
            }));
        }
    }
    let base_mva = base_mva.ok_or(ParseError::MissingBase)?;

    for (line, bus_id, p_gen, q_gen) in gens {
        let bus = buses
            .iter_mut()
            .find(|b| b.id == bus_id)
            .ok_or_else(|| row_err(line, format!("gen row references unknown bus {bus_id}")))?;
        if bus.p_gen != 0.0 || bus.q_gen != 0.0 {
            return Err(row_err(line, format!("duplicate gen row for bus {bus_id}")));
        }
        bus.p_gen = p_gen;
        bus.q_gen = q_gen;
    }

    Ok(GridCase::new(base_mva, buses, branches)?)
}

pub(crate) fn serialize_case(case: &GridCase) -> String {
    let mut out = String::new();
    out.push_str(&format!("base_mva = {}\n\n", case.base_mva()));
    out.push_str("[BUS]\n");
    out.push_str(BUS_HEADER);
    out.push('\n');
    for b in case.buses() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            b.id,
            b.kind.as_str(),
            b.p_load,
            b.q_load,
            b.v_setpoint
        ));
    }
    out.push_str("\n[BRANCH]\n");
    out.push_str(BRANCH_HEADER);
    out.push('\n');
    for br in case.branches() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            br.id, br.from, br.to, br.r, br.x, br.b_shunt, br.rating
        ));
    }
    out.push_str("\n[GEN]\n");
    out.push_str(GEN_HEADER);
    out.push('\n');
    for b in case.buses() {
        if b.p_gen != 0.0 || b.q_gen != 0.0 {
            out.push_str(&format!("{},{},{}\n", b.id, b.p_gen, b.q_gen));
        }
    }
    out
}
