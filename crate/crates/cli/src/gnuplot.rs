//! Gnuplot scripts for the CSV outputs. Scripts refer to data files by
//! their file name, so run them from the output directory.

use std::path::Path;

use crate::table::{format_number, Table};

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn header(png: &str) -> String {
    format!(
        "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,650\nset output '{png}'\n"
    )
}

/// Distinct values of column `col` in first-seen order.
fn distinct(table: &Table, col: usize) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for row in &table.rows {
        let v = row[col].render();
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

/// Script for `command`, or `None` when the command has nothing to plot.
/// `files` pairs each table with the file it was written to.
pub fn script(command: &str, files: &[(&Table, &Path)], png: &str) -> Option<String> {
    let (first, path) = *files.first()?;
    let data = file_name(path);
    let mut s = header(png);
    match command {
        "sweep" => {
            s.push_str("set xlabel 'm'\nset ylabel 'u'\n");
            s.push_str(&format!(
                "plot '{data}' using 1:(strstrt(strcol(5),'stable')==1 && strcol(6) eq 'false' ? $3 : NaN) with points pt 7 ps 0.5 title 'stable', \\\n     '{data}' using 1:(strstrt(strcol(5),'stable')!=1 && strcol(6) eq 'false' ? $3 : NaN) with points pt 6 ps 0.5 title 'unstable', \\\n     '{data}' using 1:(strcol(6) eq 'true' ? $3 : NaN) with points pt 5 ps 1.5 title 'SN'\n"
            ));
        }
        "sensitivity" => {
            s.push_str("set xlabel 'm'\n");
            s.push_str(&format!(
                "plot '{data}' using 1:4 with lines title 'T', '{data}' using 1:8 with lines title 'dT/dm'\n"
            ));
        }
        "simulate-ode" => {
            s.push_str("set xlabel 't'\nset ylabel 'u'\n");
            if first.columns.len() == 4 {
                let values: Vec<String> = distinct(first, 0);
                let name = &first.columns[0];
                s.push_str(&format!(
                    "plot for [val in \"{}\"] '{data}' using 2:(strcol(1) eq val ? $3 : NaN) with lines title '{name}='.val\n",
                    values.join(" ")
                ));
            } else {
                s.push_str(&format!(
                    "plot '{data}' using 1:2 with lines title 'u', '{data}' using 1:3 with lines title 'v'\n"
                ));
            }
        }
        "basin" => {
            let labels = distinct(first, 2);
            let mut expr = String::from("0");
            for (k, l) in labels.iter().enumerate().rev() {
                expr = format!("(strcol(3) eq '{l}' ? {} : {expr})", k + 1);
            }
            s.push_str("set xlabel 'u0'\nset ylabel 'v0'\n");
            s.push_str(&format!(
                "plot '{data}' using 1:2:{expr} with points pt 5 lc variable notitle\n"
            ));
        }
        "portrait" => {
            let traj = files.get(1).map(|(_, p)| file_name(p)).unwrap_or_default();
            let scale = format_number(0.05);
            s.push_str("set xlabel 'u'\nset ylabel 'v'\n");
            s.push_str(&format!(
                "plot '{data}' using 1:2:($3*{scale}):($4*{scale}) with vectors lc 'gray' notitle, \\\n     '{traj}' using 3:4 with lines lc 'blue' notitle, \\\n     '{data}' using (strcol(5) eq 'field' ? NaN : $1):2 with points pt 7 ps 1.2 lc 'red' notitle\n"
            ));
        }
        "simulate-pde" => {
            s.push_str("set xlabel 'x'\nset ylabel 't'\nset view map\n");
            s.push_str(&format!("splot '{data}' using 2:1:3 with points pt 5 ps 0.6 palette title 'u'\n"));
        }
        _ => return None,
    }
    Some(s)
}
