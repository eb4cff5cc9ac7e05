use fgcalc::verify::{run_lemma, LemmaId};

fn main() {
    let mut ids = vec![];
    for t in 1..=3usize {
        for extra in 0..=2usize {
            ids.push(LemmaId::Lahague { t, extra });
            ids.push(LemmaId::Lahague2 { t, extra });
            if t >= 2 {
                ids.push(LemmaId::Lahague3 { t, extra });
            }
        }
    }
    ids.push(LemmaId::ThemainthingCoefficient);
    for id in ids {
        let r = run_lemma(&id);
        print!("{}", r.render_text());
    }
}
