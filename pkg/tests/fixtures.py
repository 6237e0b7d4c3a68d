"""Hermetic fixture family shared by module and acceptance tests.

Everything here is built from fixed tables and a seeded RNG, so every
run sees the same dictionaries, drafts and references.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from termforge.dictionary import ALL_DIRECTIONS, LanguagePair, TermDictionary, TermPair, dump_dictionary
from termforge.synthgen import SINGLE, ParallelPair
from termforge.tagging import TaggedSegment

# en, de, es, ru
TERMS = [
    ("invoice", "Rechnung", "factura", "счёт-фактура"),
    ("firewall", "Firewall", "cortafuegos", "брандмауэр"),
    ("database", "Datenbank", "base de datos", "база данных"),
    ("load balancer", "Lastverteiler", "balanceador de carga", "балансировщик нагрузки"),
    ("interest rate", "Zinssatz", "tipo de interés", "процентная ставка"),
    ("cash flow", "Cashflow", "flujo de caja", "денежный поток"),
    ("encryption key", "Verschlüsselungsschlüssel", "clave de cifrado", "ключ шифрования"),
    ("balance sheet", "Bilanz", "balance general", "бухгалтерский баланс"),
    ("user interface", "Benutzeroberfläche", "interfaz de usuario", "пользовательский интерфейс"),
    ("source code", "Quellcode", "código fuente", "исходный код"),
    ("stock exchange", "Börse", "bolsa de valores", "фондовая биржа"),
    ("operating system", "Betriebssystem", "sistema operativo", "операционная система"),
    ("credit card", "Kreditkarte", "tarjeta de crédito", "кредитная карта"),
    ("backup", "Sicherung", "copia de seguridad", "резервная копия"),
    ("dividend", "Dividende", "dividendo", "дивиденд"),
    ("bandwidth", "Bandbreite", "ancho de banda", "пропускная способность"),
    ("audit trail", "Prüfpfad", "registro de auditoría", "журнал аудита"),
    ("exchange rate", "Wechselkurs", "tipo de cambio", "обменный курс"),
    ("web server", "Webserver", "servidor web", "веб-сервер"),
    ("tax return", "Steuererklärung", "declaración de impuestos", "налоговая декларация"),
    ("password", "Passwort", "contraseña", "пароль"),
    ("mortgage", "Hypothek", "hipoteca", "ипотека"),
    ("network switch", "Netzwerk-Switch", "conmutador de red", "сетевой коммутатор"),
    ("shareholder", "Aktionär", "accionista", "акционер"),
    ("software update", "Softwareaktualisierung", "actualización de software", "обновление программы"),
    ("budget deficit", "Haushaltsdefizit", "déficit presupuestario", "дефицит бюджета"),
    ("virtual machine", "virtuelle Maschine", "máquina virtual", "виртуальная машина"),
    ("bank account", "Bankkonto", "cuenta bancaria", "банковский счёт"),
    ("data breach", "Datenpanne", "filtración de datos", "утечка данных"),
    ("net income", "Nettoeinkommen", "ingreso neto", "чистый доход"),
    ("router", "Router", "enrutador", "маршрутизатор"),
    ("asset management", "Vermögensverwaltung", "gestión de activos", "управление активами"),
    ("compiler", "Compiler", "compilador", "компилятор"),
    ("payroll", "Gehaltsabrechnung", "nómina", "расчёт зарплаты"),
    ("spreadsheet", "Tabellenkalkulation", "hoja de cálculo", "электронная таблица"),
    ("venture capital", "Risikokapital", "capital de riesgo", "венчурный капитал"),
    ("hard drive", "Festplatte", "disco duro", "жёсткий диск"),
    ("inflation", "Inflation", "inflación", "инфляция"),
    ("search engine", "Suchmaschine", "motor de búsqueda", "поисковая система"),
    ("loan agreement", "Darlehensvertrag", "contrato de préstamo", "кредитный договор"),
    ("malware", "Schadsoftware", "software malicioso", "вредоносное ПО"),
    ("pension fund", "Pensionsfonds", "fondo de pensiones", "пенсионный фонд"),
    ("microprocessor", "Mikroprozessor", "microprocesador", "микропроцессор"),
    ("profit margin", "Gewinnspanne", "margen de beneficio", "маржа прибыли"),
    ("API key", "API-Schlüssel", "clave de API", "ключ API"),
    ("annual report", "Jahresbericht", "informe anual", "годовой отчёт"),
    ("data center", "Rechenzentrum", "centro de datos", "центр обработки данных"),
    ("wire transfer", "Überweisung", "transferencia bancaria", "банковский перевод"),
    ("access token", "Zugriffstoken", "token de acceso", "токен доступа"),
    ("quarterly earnings", "Quartalsergebnis", "ganancias trimestrales", "квартальная прибыль"),
]
LANG_COLUMN = {"de": 1, "es": 2, "ru": 3}

# sentence frames: (en, de, es, ru); slots {a} {b} {c}
FRAMES = [
    ("The {a} was updated yesterday.",
     "Die {a} wurde gestern aktualisiert.",
     "El {a} se actualizó ayer.",
     "{a} был обновлён вчера."),
    ("We reviewed the {a} and the {b} last week.",
     "Wir haben die {a} und die {b} letzte Woche geprüft.",
     "Revisamos el {a} y el {b} la semana pasada.",
     "На прошлой неделе мы проверили {a} и {b}."),
    ("Please send the {a} to the finance department.",
     "Bitte senden Sie die {a} an die Finanzabteilung.",
     "Envíe el {a} al departamento financiero.",
     "Пожалуйста, отправьте {a} в финансовый отдел."),
    ("Our team monitors the {a} every day.",
     "Unser Team überwacht die {a} jeden Tag.",
     "Nuestro equipo supervisa el {a} todos los días.",
     "Наша команда ежедневно контролирует {a}."),
    ("The new {a} improves the {b} significantly.",
     "Die neue {a} verbessert die {b} erheblich.",
     "El nuevo {a} mejora el {b} de forma significativa.",
     "Новый {a} значительно улучшает {b}."),
    ("Changes to the {a} require approval from the board.",
     "Änderungen an der {a} erfordern die Zustimmung des Vorstands.",
     "Los cambios en el {a} requieren la aprobación del consejo.",
     "Изменения в {a} требуют одобрения совета директоров."),
    ("The auditors asked about the {a}, the {b} and the {c}.",
     "Die Prüfer fragten nach der {a}, der {b} und der {c}.",
     "Los auditores preguntaron por el {a}, el {b} y el {c}.",
     "Аудиторы спросили о {a}, {b} и {c}."),
    ("Without a reliable {a}, the {b} cannot be processed.",
     "Ohne eine zuverlässige {a} kann die {b} nicht verarbeitet werden.",
     "Sin un {a} fiable, el {b} no se puede procesar.",
     "Без надёжного {a} невозможно обработать {b}."),
]
SLOTS = ("a", "b", "c")


def proper_pairs(direction: LanguagePair) -> list[TermPair]:
    col = LANG_COLUMN[direction.target]
    return [TermPair(row[0], row[col]) for row in TERMS]


def random_pairs(direction: LanguagePair, seed: int = 7) -> list[TermPair]:
    """Each source term gets the target term of a different entry (a derangement)."""
    col = LANG_COLUMN[direction.target]
    n = len(TERMS)
    shift = random.Random(f"{seed}-{direction.code}").randrange(1, n)
    return [TermPair(TERMS[i][0], TERMS[(i + shift) % n][col]) for i in range(n)]


def proper_db(direction: LanguagePair) -> TermDictionary:
    return TermDictionary.from_pairs(direction, proper_pairs(direction))


def random_db(direction: LanguagePair) -> TermDictionary:
    return TermDictionary.from_pairs(direction, random_pairs(direction))


def segments(direction: LanguagePair, count: int = 600, seed: int = 11, keep_rate: float = 0.5) -> list[dict]:
    """Rows ``{"id", "source", "draft", "reference", "terms"}``.

    The reference uses the proper target terms. The draft keeps each proper
    term with probability ``keep_rate`` and otherwise leaves the English
    source term untranslated, the way a weak draft system would.
    """
    col = LANG_COLUMN[direction.target]
    rng = random.Random(f"{seed}-{direction.code}")
    rows = []
    seen: set[str] = set()
    k = 0
    while len(rows) < count:
        frame = FRAMES[k % len(FRAMES)]
        k += 1
        slots = [s for s in SLOTS if "{" + s + "}" in frame[0]]
        picked = rng.sample(range(len(TERMS)), len(slots))
        src = frame[0].format(**{s: TERMS[i][0] for s, i in zip(slots, picked)})
        if src in seen:
            continue
        seen.add(src)
        ref = frame[col].format(**{s: TERMS[i][col] for s, i in zip(slots, picked)})
        draft = frame[col].format(**{
            s: TERMS[i][col] if rng.random() < keep_rate else TERMS[i][0] for s, i in zip(slots, picked)
        })
        rows.append({
            "id": len(rows), "source": src, "draft": draft, "reference": ref,
            "terms": [{"src": TERMS[i][0], "tgt": TERMS[i][col]} for i in picked],
        })
    return rows


def write_jsonl(path: Path, rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")
    return path


def write_workspace(root: Path, count: int = 600) -> dict:
    """Lay out dev files, drafts and references for all directions under ``root``."""
    paths = {}
    for direction in ALL_DIRECTIONS:
        rows = segments(direction, count)
        code = direction.code
        dev = [{"id": r["id"], "source": r["source"], "target": r["reference"], "terms": r["terms"]} for r in rows]
        rand = {p.source_term: p.target_term for p in random_pairs(direction)}
        dev_random = [
            {"id": r["id"], "source": r["source"], "target": r["reference"],
             "terms": [{"src": t["src"], "tgt": rand[t["src"]]} for t in r["terms"]]}
            for r in rows
        ]
        paths[code] = {
            "dev": write_jsonl(root / "dev" / f"{code}.dev.jsonl", dev),
            "dev_random": write_jsonl(root / "dev" / f"{code}.random.dev.jsonl", dev_random),
            "drafts": write_jsonl(root / "drafts" / f"{code}.drafts.jsonl",
                                  [{"id": r["id"], "source": r["source"], "draft": r["draft"]} for r in rows]),
            "refs": write_jsonl(root / "refs" / f"{code}.ref.jsonl",
                                [{"id": r["id"], "reference": r["reference"]} for r in rows]),
        }
    return paths


def write_dict_dir(root: Path) -> Path:
    for direction in ALL_DIRECTIONS:
        (root / f"{direction.code}.proper.dict.jsonl").parent.mkdir(parents=True, exist_ok=True)
        (root / f"{direction.code}.proper.dict.jsonl").write_text(dump_dictionary(proper_db(direction)), encoding="utf-8")
        (root / f"{direction.code}.random.dict.jsonl").write_text(dump_dictionary(random_db(direction)), encoding="utf-8")
    return root


# --- filtering fixture --------------------------------------------------------

def _pair(direction: LanguagePair, src_tagged: str, tgt_tagged: str, terms: tuple[TermPair, ...]) -> ParallelPair:
    return ParallelPair(TaggedSegment.parse(src_tagged), TaggedSegment.parse(tgt_tagged), direction, terms, SINGLE, 0.5)


def filtering_corpus(seed: int = 3) -> list[ParallelPair]:
    """1,000 tagged pairs built so that a 0.85 stub threshold keeps 650.

    650 distinct good pairs, 200 pairs whose target lost its term (the stub
    then scores 0.5 or below), 150 case/whitespace variants of good sources
    placed after their originals.
    """
    direction = LanguagePair("en", "de")
    rng = random.Random(seed)
    good: list[ParallelPair] = []
    seen = set()
    while len(good) < 650:
        frame = rng.choice([f for f in FRAMES if "{b}" not in f[0]])
        i = rng.randrange(len(TERMS))
        n = rng.randrange(10_000)
        src = frame[0].format(a=f"[TERM]{TERMS[i][0]}[/TERM]")[:-1] + f" (case {n})."
        if src in seen:
            continue
        seen.add(src)
        tgt = frame[1].format(a=f"[TERM]{TERMS[i][1]}[/TERM]")[:-1] + f" (Fall {n})."
        good.append(_pair(direction, src, tgt, (TermPair(TERMS[i][0], TERMS[i][1]),)))
    bad = []
    for k in range(200):
        i = k % len(TERMS)
        src = f"[TERM]{TERMS[i][0]}[/TERM] entry {k} was archived."
        tgt = f"[TERM]Archiv[/TERM] Eintrag {k} wurde archiviert."
        bad.append(_pair(direction, src, tgt, (TermPair(TERMS[i][0], TERMS[i][1]),)))
    dups = []
    for j in rng.sample(range(650), 150):
        g = good[j]
        variant = g.source.text.upper().replace(" ", "  ", 1)
        dups.append((j, _pair(direction, variant, g.target.text, g.terms_used)))
    items: list[ParallelPair] = list(good)
    # interleave: each duplicate lands somewhere after its original
    for j, dup in sorted(dups, key=lambda x: x[0]):
        pos = rng.randrange(items.index(good[j]) + 1, len(items) + 1)
        items.insert(pos, dup)
    for b in bad:
        items.insert(rng.randrange(len(items) + 1), b)
    return items
