use crate::error::{Error, Result};

/// Sampled observations `y(t)` with optional per-point standard deviations.
///
/// Points are kept sorted by `t`, so the order in which they were supplied never matters.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSeries {
    t: Vec<f64>,
    y: Vec<f64>,
    sigma: Option<Vec<f64>>,
}

impl DataSeries {
    pub fn new(t: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidParameter {
            name: "data series",
            reason,
        };
        if t.len() != y.len() || sigma.as_ref().is_some_and(|s| s.len() != t.len()) {
            return Err(invalid("columns have different lengths".into()));
        }
        if t.is_empty() {
            return Err(invalid("no data points".into()));
        }
        if let Some(k) = t.iter().chain(&y).position(|v| !v.is_finite()) {
            return Err(invalid(format!(
                "non-finite value at position {}",
                k % t.len()
            )));
        }
        if let Some(s) = &sigma {
            if let Some(k) = s.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(invalid(format!("sigma at position {k} must be positive")));
            }
        }
        let mut order: Vec<usize> = (0..t.len()).collect();
        order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let ts = pick(&t);
        if ts.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate time values".into()));
        }
        Ok(Self {
            y: pick(&y),
            sigma: sigma.as_deref().map(pick),
            t: ts,
        })
    }

    /// Parses `t,y[,sigma]` rows. Blank lines and `#` comments are skipped; a leading
    /// non-numeric row is taken as a header.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut y = Vec::new();
        let mut sigma = Vec::new();
        let mut columns = None;
        let mut seen_row = false;
        let mut first_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                fields.iter().map(|f| f.parse::<f64>()).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if !seen_row => {
                    seen_row = true;
                    if !(2..=3).contains(&fields.len()) {
                        return Err(Error::Data {
                            line: line_no,
                            message: format!(
                                "expected 2 or 3 header columns, found {}",
                                fields.len()
                            ),
                        });
                    }
                    columns = Some(fields.len());
                    continue;
                }
                Err(e) => {
                    return Err(Error::Data {
                        line: line_no,
                        message: format!("not a number: {e}"),
                    })
                }
            };
            seen_row = true;
            let n = *columns.get_or_insert(values.len());
            if values.len() != n || !(2..=3).contains(&n) {
                return Err(Error::Data {
                    line: line_no,
                    message: format!(
                        "expected {n} columns (t, y[, sigma]), found {}",
                        values.len()
                    ),
                });
            }
            if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                return Err(Error::Data {
                    line: line_no,
                    message: format!("non-finite value {v}"),
                });
            }
            if n == 3 && values[2] <= 0.0 {
                return Err(Error::Data {
                    line: line_no,
                    message: format!("sigma must be positive, got {}", values[2]),
                });
            }
            if first_line == 0 {
                first_line = line_no;
            }
            t.push(values[0]);
            y.push(values[1]);
            if n == 3 {
                sigma.push(values[2]);
            }
        }
        if t.is_empty() {
            return Err(Error::Data {
                line: text.lines().count().max(1),
                message: "no data rows".into(),
            });
        }
        let sigma = (columns == Some(3)).then_some(sigma);
        Self::new(t, y, sigma).map_err(|e| Error::Data {
            line: first_line,
            message: e.to_string(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(if self.sigma.is_some() {
            "t,y,sigma\n"
        } else {
            "t,y\n"
        });
        for i in 0..self.len() {
            match &self.sigma {
                Some(s) => out.push_str(&format!("{:e},{:e},{:e}\n", self.t[i], self.y[i], s[i])),
                None => out.push_str(&format!("{:e},{:e}\n", self.t[i], self.y[i])),
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma(&self) -> Option<&[f64]> {
        self.sigma.as_deref()
    }

    /// Same points with `t` and `y` multiplied by constants (used for unit changes).
    pub fn scaled(&self, t_scale: f64, y_scale: f64) -> Result<Self> {
        Self::new(
            self.t.iter().map(|v| v * t_scale).collect(),
            self.y.iter().map(|v| v * y_scale).collect(),
            self.sigma
                .as_ref()
                .map(|s| s.iter().map(|v| v * y_scale.abs()).collect()),
        )
    }
}
