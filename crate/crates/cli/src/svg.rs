use std::fmt::Write;

/// A static plot in data coordinates, rendered to SVG.
pub struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    width: f64,
    height: f64,
    margin: f64,
    title: String,
    labels: (String, String),
    body: String,
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) }
        };
        Self {
            x: pad(x),
            y: pad(y),
            width: 640.0,
            height: 480.0,
            margin: 56.0,
            title: String::new(),
            labels: ("J".into(), "H".into()),
            body: String::new(),
        }
    }

    pub fn title(mut self, t: &str) -> Self {
        self.title = t.to_string();
        self
    }

    pub fn labels(mut self, x: &str, y: &str) -> Self {
        self.labels = (x.to_string(), y.to_string());
        self
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let w = self.width - 2.0 * self.margin;
        let h = self.height - 2.0 * self.margin;
        (
            self.margin + w * (p[0] - self.x.0) / (self.x.1 - self.x.0),
            self.height - self.margin - h * (p[1] - self.y.0) / (self.y.1 - self.y.0),
        )
    }

    fn path(&self, pts: &[[f64; 2]]) -> String {
        let mut d = String::new();
        for p in pts {
            let (x, y) = self.px(*p);
            let _ = write!(d, "{x:.2},{y:.2} ");
        }
        d.trim_end().to_string()
    }

    pub fn points(&mut self, pts: &[[f64; 2]], radius: f64, color: &str) {
        let _ = writeln!(self.body, "<g fill=\"{color}\">");
        for p in pts {
            let (x, y) = self.px(*p);
            let _ = writeln!(self.body, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius}\"/>");
        }
        self.body.push_str("</g>\n");
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let _ = writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"/>",
            self.path(pts)
        );
    }

    pub fn polygon(&mut self, pts: &[[f64; 2]], fill: &str, stroke: &str) {
        let _ = writeln!(
            self.body,
            "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"{stroke}\" stroke-width=\"1.5\"/>",
            self.path(pts)
        );
    }

    pub fn ring(&mut self, c: [f64; 2], radius: f64, color: &str) {
        let (x, y) = self.px(c);
        let _ = writeln!(
            self.body,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{radius}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>"
        );
    }

    pub fn dashed(&mut self, a: [f64; 2], b: [f64; 2], color: &str) {
        let (x1, y1) = self.px(a);
        let (x2, y2) = self.px(b);
        let _ = writeln!(
            self.body,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{color}\" stroke-dasharray=\"4 3\"/>"
        );
    }

    fn axes(&self) -> String {
        let mut s = String::new();
        let (x0, y0) = (self.margin, self.height - self.margin);
        let (x1, y1) = (self.width - self.margin, self.margin);
        let _ = writeln!(
            s,
            "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
            x1 - x0,
            y0 - y1
        );
        s.push_str("<g font-family=\"sans-serif\" font-size=\"11\">\n");
        let step = nice_step(self.x.1 - self.x.0);
        let mut t = (self.x.0 / step).ceil() * step;
        while t <= self.x.1 + 1e-9 * step {
            let (px, _) = self.px([t, self.y.0]);
            let _ = writeln!(
                s,
                "<line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"black\"/><text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                y0 + 4.0,
                y0 + 16.0,
                fmt_tick(t, step)
            );
            t += step;
        }
        let step = nice_step(self.y.1 - self.y.0);
        let mut t = (self.y.0 / step).ceil() * step;
        while t <= self.y.1 + 1e-9 * step {
            let (_, py) = self.px([self.x.0, t]);
            let _ = writeln!(
                s,
                "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\"/><text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                x0 - 4.0,
                x0 - 6.0,
                py + 4.0,
                fmt_tick(t, step)
            );
            t += step;
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            self.width / 2.0,
            self.height - 12.0,
            escape(&self.labels.0)
        );
        let _ = writeln!(
            s,
            "<text x=\"14\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
            self.height / 2.0,
            self.height / 2.0,
            escape(&self.labels.1)
        );
        if !self.title.is_empty() {
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
                self.width / 2.0,
                escape(&self.title)
            );
        }
        s.push_str("</g>\n");
        s
    }

    pub fn render(&self) -> String {
        let (x0, y1) = (self.margin, self.margin);
        let (w, h) = (self.width - 2.0 * self.margin, self.height - 2.0 * self.margin);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
             <clipPath id=\"frame\"><rect x=\"{x0}\" y=\"{y1}\" width=\"{w}\" height=\"{h}\"/></clipPath>\n\
             <g clip-path=\"url(#frame)\">\n{}</g>\n{}</svg>\n",
            self.width,
            self.height,
            self.width,
            self.height,
            self.body,
            self.axes()
        )
    }
}

fn fmt_tick(t: f64, step: f64) -> String {
    let digits = (-step.log10().floor()).max(0.0) as usize;
    let v = if t.abs() < 1e-9 * step { 0.0 } else { t };
    format!("{v:.digits$}")
}
